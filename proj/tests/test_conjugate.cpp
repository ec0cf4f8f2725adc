#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tcproc/conjugate.hpp"
#include "tcproc/stochvol.hpp"

using namespace tcproc;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

ControlSetSpec martingale_set(double rho, double cap) {
    return ControlSetSpec::linear_constraint(
        1, [rho](double, const Vec&) { return rho; },
        [cap](double, const Vec&) { return cap; });
}

}  // namespace

TEST_CASE("conjugate of the linear form over a ball: f(z) = K|z|") {
    ControlSetSpec L = ControlSetSpec::ball(1, 2.0);
    ConjugateResult r = fenchel_numeric(PenaltySpec::zero(), L, 0.0, v1(0.0), v1(3.0), 8, 30);
    CHECK(r.value == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(r.argmax(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.attained);
}

TEST_CASE("conjugate of the quadratic penalty is quadratic: f(z) = z^2/2") {
    ControlSetSpec L = ControlSetSpec::ball(1, 10.0);
    ConjugateResult r =
        fenchel_numeric(PenaltySpec::power(2.0), L, 0.0, v1(0.0), v1(3.0), 8, 40);
    CHECK(r.value == doctest::Approx(4.5).epsilon(1e-9));
    CHECK(r.argmax(0) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("martingale-constraint conjugate at rho=0 vs a brute-force 1-D oracle") {
    ControlSetSpec L = martingale_set(0.0, 1.0);
    Vec z = v2(0.0, 0.5);
    // independent oracle: scan nu in [-1, 1] at step 1e-4
    double oracle = -std::numeric_limits<double>::infinity();
    double nu_star = 0.0;
    for (int i = -10000; i <= 10000; ++i) {
        double nu = i * 1e-4;
        double val = 0.5 * nu - 0.5 * nu * nu;
        if (val > oracle) {
            oracle = val;
            nu_star = nu;
        }
    }
    CHECK(oracle == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(nu_star == doctest::Approx(0.5).epsilon(1e-9));

    ConjugateResult r = fenchel_numeric(PenaltySpec::power(2.0), L, 0.0, v2(0, 0), z, 8, 40);
    CHECK(r.value == doctest::Approx(0.125).epsilon(1e-9));
    CHECK(r.argmax(0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(r.argmax(1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("two-branch closed form: reference points") {
    CHECK(fenchel_closed_stochvol(2.0, 1.0, 0.0, v2(0.3, 0.0)) == doctest::Approx(0.045));
    CHECK(fenchel_closed_stochvol(2.0, 1.0, 0.0, v2(0.0, 0.0)) == doctest::Approx(0.0));
    CHECK(fenchel_closed_stochvol(2.0, 1.0, 0.0, v2(2.0, 0.0)) == doctest::Approx(1.5));
    CHECK_THROWS_AS(fenchel_closed_stochvol(2.0, 1.0, 1.0, v2(1, 1)), DomainError);
    CHECK_THROWS_AS(fenchel_closed_stochvol(0.5, 1.0, 0.0, v2(1, 1)), DomainError);
    CHECK_THROWS_AS(fenchel_closed_stochvol(2.0, -1.0, 0.0, v2(1, 1)), DomainError);
}

TEST_CASE("effective closed form matches the numeric conjugate, including rho != 0") {
    // the numeric conjugate over the constraint subspace is ground truth; the
    // effective form reduces to the subspace coordinate exactly
    for (double rho : {0.0, 0.3, -0.6}) {
        double Phi = 1.0;
        ControlSetSpec L = martingale_set(rho, std::sqrt(Phi));
        PenaltySpec g = PenaltySpec::power(2.0);
        for (double za : {-1.5, -0.2, 0.0, 0.4, 2.0}) {
            for (double zb : {-0.8, 0.0, 0.6}) {
                Vec z = v2(za, zb);
                double closed = fenchel_stochvol_effective(2.0, Phi, rho, z);
                double numeric = fenchel_numeric(g, L, 0.0, v2(0, 0), z, 64, 40).value;
                CAPTURE(rho);
                CAPTURE(za);
                CAPTURE(zb);
                CHECK(closed == doctest::Approx(numeric).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("literal transcription agrees with the numeric conjugate only at rho=0") {
    // documented discrepancy: for rho != 0 the transcribed psi swaps the roles
    // of z and z' and misses the subspace metric factor, so it deviates from
    // the numeric ground truth; the effective form is the corrected reduction
    Vec z = v2(1.0, 0.2);
    double lit0 = fenchel_closed_stochvol(2.0, 1.0, 0.0, z);
    double num0 = fenchel_numeric(PenaltySpec::power(2.0), martingale_set(0.0, 1.0), 0.0,
                                  v2(0, 0), z, 64, 40)
                      .value;
    // at rho=0 the literal psi uses the wrong component (z instead of z')
    CHECK(std::abs(lit0 - num0) > 1e-3);
    Vec z_sw = v2(0.2, 1.0);
    CHECK(fenchel_closed_stochvol(2.0, 1.0, 0.0, z_sw) == doctest::Approx(num0).epsilon(1e-7));
}

TEST_CASE("Fenchel-Young inequality on random pairs") {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    ControlSetSpec L = ControlSetSpec::ball(2, 1.5);
    PenaltySpec g = PenaltySpec::power(3.0);
    int violations = 0;
    for (int i = 0; i < 2000; ++i) {
        Vec z = v2(unif(eng), unif(eng));
        Vec lam = L.project(0.0, v2(0, 0), v2(unif(eng), unif(eng)));
        double f = fenchel_numeric(g, L, 0.0, v2(0, 0), z, 16, 25).value;
        if (z.dot(lam) > f + g.eval_on_domain(0.0, v2(0, 0), lam) + 1e-9) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("numeric conjugate is monotone in resolution and depth") {
    ControlSetSpec L = ControlSetSpec::ball(2, 2.0);
    PenaltySpec g = PenaltySpec::power(2.0);
    Vec z = v2(0.77, -1.3);
    double prev = -1e300;
    for (int res : {2, 4, 8, 16}) {
        double v = fenchel_numeric(g, L, 0.0, v2(0, 0), z, res, 0).value;
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
    prev = -1e300;
    for (int depth : {0, 2, 5, 12}) {
        double v = fenchel_numeric(g, L, 0.0, v2(0, 0), z, 4, depth).value;
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
}

TEST_CASE("numeric conjugate is a lower bound on the true value") {
    ControlSetSpec L = ControlSetSpec::ball(1, 2.0);
    for (int res : {2, 3, 8}) {
        for (int depth : {0, 3}) {
            double v =
                fenchel_numeric(PenaltySpec::zero(), L, 0.0, v1(0), v1(1.7), res, depth).value;
            CHECK(v <= 2.0 * 1.7 + 1e-12);
        }
    }
}

TEST_CASE("convexity of f along z segments") {
    ControlSetSpec L = ControlSetSpec::ball(2, 1.0);
    PenaltySpec g = PenaltySpec::power(2.0);
    auto f = [&](const Vec& z) {
        return fenchel_numeric(g, L, 0.0, v2(0, 0), z, 32, 30).value;
    };
    Vec z1 = v2(1.2, -0.4), z2 = v2(-0.6, 0.9);
    double f1 = f(z1), f2 = f(z2);
    for (double th : {0.25, 0.5, 0.75}) {
        Vec mid = th * z1 + (1.0 - th) * z2;
        CHECK(f(mid) <= th * f1 + (1.0 - th) * f2 + 1e-6);
    }
}

TEST_CASE("normalized penalty gives f >= 0 and f(0) = 0") {
    ControlSetSpec L = ControlSetSpec::ball(2, 1.0);
    PenaltySpec g = PenaltySpec::power(2.0);
    CHECK(fenchel_numeric(g, L, 0.0, v2(0, 0), v2(0, 0), 8, 10).value ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(fenchel_numeric(g, L, 0.0, v2(0, 0), v2(0.9, 0.1), 8, 10).value >= 0.0);
}

TEST_CASE("argmax tie-breaking is deterministic (smallest lattice index)") {
    // z = 0, g = 0 over a ball: every lattice point ties at value 0; the first
    // lattice point must win
    ControlSetSpec L = ControlSetSpec::ball(1, 1.0);
    ConjugateResult a = fenchel_numeric(PenaltySpec::zero(), L, 0.0, v1(0), v1(0.0), 4, 0);
    ConjugateResult b = fenchel_numeric(PenaltySpec::zero(), L, 0.0, v1(0), v1(0.0), 4, 0);
    CHECK(a.argmax(0) == b.argmax(0));
    CHECK(a.argmax(0) == L.sample(0.0, v1(0), 4).front()(0));
}

TEST_CASE("growth certificate: zero and constant penalties") {
    std::vector<std::pair<double, Vec>> nodes = {{0.0, v1(0.0)}, {0.5, v1(2.0)}};
    ControlSetSpec L = ControlSetSpec::ball(1, 3.0);
    GrowthReport r0 = check_Hg(PenaltySpec::zero(), L, nodes, 4);
    CHECK(r0.pass);
    CHECK(r0.max_ratio == doctest::Approx(0.0));
    // constant(c) certifies |g| <= |c| (1 + ||x||^0) = 2|c|, so the ratio is 1/2
    GrowthReport rc = check_Hg(PenaltySpec::constant(2.5), L, nodes, 4);
    CHECK(rc.pass);
    CHECK(rc.max_ratio == doctest::Approx(0.5));
}

TEST_CASE("growth certificate: power(2) on a linear-growth-truncated set with m=2") {
    double C = 0.7;
    ControlSetSpec L = ControlSetSpec::growth_truncated(ControlSetSpec::ball(2, 1e6), C);
    // g = ||lambda||^2/2 <= C^2 (1+||x||)^2 / 2 <= C^2 (1+||x||^2)
    PenaltySpec g = PenaltySpec::power(2.0, C * C, 2);
    std::vector<std::pair<double, Vec>> nodes;
    for (double xv : {0.0, 0.5, 1.0, 3.0, 6.0}) nodes.push_back({0.0, v2(xv, -xv)});
    GrowthReport r = check_Hg(g, L, nodes, 6);
    CHECK(r.pass);
}

TEST_CASE("growth certificate failure names the worst node and throws") {
    ControlSetSpec L = ControlSetSpec::ball(1, 4.0);
    PenaltySpec g = PenaltySpec::power(2.0, 1.0, 0);  // claims sup |g| <= 2, actual 8
    std::vector<std::pair<double, Vec>> nodes = {{0.25, v1(1.5)}};
    CHECK_THROWS_AS(check_Hg(g, L, nodes, 4), GrowthViolationError);
    GrowthReport r = check_Hg(g, L, nodes, 4, false);
    CHECK(!r.pass);
    CHECK(r.max_ratio == doctest::Approx(4.0));
    CHECK(r.worst_t == doctest::Approx(0.25));
}
