#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tcproc/core_model.hpp"
#include "tcproc/io.hpp"
#include "tcproc/stochvol.hpp"

using namespace tcproc;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

bool sample_contains(const std::vector<Vec>& s, const Vec& target, double tol = 1e-12) {
    return std::any_of(s.begin(), s.end(), [&](const Vec& v) {
        return (v - target).lpNorm<Eigen::Infinity>() <= tol;
    });
}

}  // namespace

TEST_CASE("eval_a identity") {
    DiffusionSpec d = DiffusionSpec::constant(Mat::Identity(2, 2));
    Mat a = eval_a(d, 0.0, v2(0.3, -0.7));
    CHECK(a.isApprox(Mat::Identity(2, 2)));
}

TEST_CASE("eval_a lower triangular product") {
    Mat s(2, 2);
    s << 2, 0, 1, 1;
    Mat expect(2, 2);
    expect << 4, 2, 2, 2;
    Mat a = eval_a(DiffusionSpec::constant(s), 0.0, v2(0, 0));
    CHECK(a.isApprox(expect, 1e-14));
    CHECK((a - a.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("eval_a joint market block: sigma=gamma=1, rho=0.5") {
    MarketSpec mkt = MarketSpec::flat(1.0, 1.0, 0.5, 0.0, 1.0, 2.0);
    DiffusionSpec d = build_joint_diffusion(mkt);
    Mat a = eval_a(d, 0.0, v2(1.0, 0.0));
    Mat expect(2, 2);
    expect << 1.0, 0.5, 0.5, 1.0;
    CHECK(a.isApprox(expect, 1e-12));
}

TEST_CASE("eval_a rejects non-finite sigma") {
    DiffusionSpec d;
    d.dim = 1;
    d.sigma = [](double, const Vec&) {
        return Mat::Constant(1, 1, std::numeric_limits<double>::quiet_NaN());
    };
    CHECK_THROWS_AS(eval_a(d, 0.0, v1(0.0)), NonFiniteError);
}

TEST_CASE("diagonal_affine clamps to its bounds") {
    DiffusionSpec d = DiffusionSpec::diagonal_affine(v1(1.0), v1(2.0), 0.5, 3.0);
    CHECK(d.sigma(0.0, v1(10.0))(0, 0) == doctest::Approx(3.0));
    CHECK(d.sigma(0.0, v1(-10.0))(0, 0) == doctest::Approx(0.5));
    CHECK(d.sigma(0.0, v1(0.25))(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("table_interpolated sigma is piecewise linear in x") {
    Vec knots(3);
    knots << -1.0, 0.0, 1.0;
    Mat values(1, 3);
    values << 2.0, 1.0, 2.0;
    DiffusionSpec d = DiffusionSpec::table_interpolated(knots, values);
    CHECK(d.sigma(0.0, v1(-0.5))(0, 0) == doctest::Approx(1.5));
    CHECK(d.sigma(0.0, v1(0.5))(0, 0) == doctest::Approx(1.5));
    CHECK(d.sigma(0.0, v1(5.0))(0, 0) == doctest::Approx(2.0));  // clamped
}

TEST_CASE("control sample: ball(1) in 1-D at resolution 2") {
    ControlSetSpec L = ControlSetSpec::ball(1, 1.0);
    std::vector<Vec> s = L.sample(0.0, v1(0.0), 2);
    CHECK(s.size() == 3);
    CHECK(sample_contains(s, v1(-1.0)));
    CHECK(sample_contains(s, v1(0.0)));
    CHECK(sample_contains(s, v1(1.0)));
}

TEST_CASE("control sample: point set is {0}") {
    ControlSetSpec L = ControlSetSpec::point(2);
    std::vector<Vec> s = L.sample(0.5, v2(1, 1), 7);
    REQUIRE(s.size() == 1);
    CHECK(s[0].isZero());
}

TEST_CASE("control sample: linear constraint with rho=0 forces alpha=0") {
    ControlSetSpec L = ControlSetSpec::linear_constraint(
        1, [](double, const Vec&) { return 0.0; },
        [](double, const Vec&) { return 1.0; });
    std::vector<Vec> s = L.sample(0.0, v2(0, 0), 2);
    CHECK(s.size() == 3);
    CHECK(sample_contains(s, v2(0, -1)));
    CHECK(sample_contains(s, v2(0, 0)));
    CHECK(sample_contains(s, v2(0, 1)));
}

TEST_CASE("control sample always contains 0 and stays inside Lambda") {
    std::vector<ControlSetSpec> sets;
    sets.push_back(ControlSetSpec::ball(2, 1.5));
    sets.push_back(ControlSetSpec::box(v2(-1, -2), v2(3, 0.5)));
    sets.push_back(ControlSetSpec::linear_constraint(
        1, [](double, const Vec&) { return 0.4; },
        [](double, const Vec& x) { return 1.0 + 0.5 * x.norm(); }));
    sets.push_back(ControlSetSpec::growth_truncated(ControlSetSpec::ball(2, 10.0), 1.0));
    for (const auto& L : sets) {
        for (int res : {1, 2, 5}) {
            std::vector<Vec> s = L.sample(0.3, v2(0.7, -0.2), res);
            CHECK(sample_contains(s, Vec::Zero(2)));
            for (const Vec& lam : s) CHECK(L.contains(0.3, v2(0.7, -0.2), lam, 1e-10));
        }
    }
}

TEST_CASE("linear-constraint samples satisfy the constraint to 1e-10") {
    ControlSetSpec L = ControlSetSpec::linear_constraint(
        1, [](double, const Vec&) { return 0.6; },
        [](double, const Vec&) { return 2.0; });
    double root = std::sqrt(1.0 - 0.36);
    for (const Vec& lam : L.sample(0.0, v2(0, 0), 8))
        CHECK(std::abs(lam(0) * root + lam(1) * 0.6) <= 1e-10);
}

TEST_CASE("projection: radial onto the ball") {
    ControlSetSpec L = ControlSetSpec::ball(2, 1.0);
    Vec p = L.project(0.0, v2(0, 0), v2(3, 4));
    CHECK(p(0) == doctest::Approx(0.6));
    CHECK(p(1) == doctest::Approx(0.8));
}

TEST_CASE("projection: identity on members, idempotent, non-expansive") {
    std::vector<ControlSetSpec> sets;
    sets.push_back(ControlSetSpec::ball(2, 1.0));
    sets.push_back(ControlSetSpec::box(v2(-1, -1), v2(1, 2)));
    sets.push_back(ControlSetSpec::linear_constraint(
        1, [](double, const Vec&) { return 0.3; },
        [](double, const Vec&) { return 1.0; }));
    std::vector<Vec> probes = {v2(0.2, -0.1), v2(2, 3), v2(-4, 0.5), v2(0, 0)};
    for (const auto& L : sets) {
        for (const Vec& z : probes) {
            Vec p = L.project(0.1, v2(0, 0), z);
            CHECK(L.contains(0.1, v2(0, 0), p, 1e-9));
            Vec pp = L.project(0.1, v2(0, 0), p);
            CHECK((pp - p).norm() <= 1e-12);
        }
        // non-expansiveness on pairs
        for (size_t i = 0; i < probes.size(); ++i)
            for (size_t j = i + 1; j < probes.size(); ++j) {
                Vec pi = L.project(0.1, v2(0, 0), probes[i]);
                Vec pj = L.project(0.1, v2(0, 0), probes[j]);
                CHECK((pi - pj).norm() <= (probes[i] - probes[j]).norm() + 1e-12);
            }
    }
}

TEST_CASE("projection: linear constraint with rho=0 zeroes the alpha block") {
    ControlSetSpec L = ControlSetSpec::linear_constraint(
        1, [](double, const Vec&) { return 0.0; },
        [](double, const Vec&) { return 10.0; });
    Vec p = L.project(0.0, v2(0, 0), v2(2, 3));
    CHECK(p(0) == doctest::Approx(0.0));
    CHECK(p(1) == doctest::Approx(3.0));
}

TEST_CASE("growth truncation keeps the linear-growth bound") {
    double C = 0.8;
    ControlSetSpec L = ControlSetSpec::growth_truncated(ControlSetSpec::ball(2, 100.0), C);
    for (double xv : {0.0, 1.0, 4.0}) {
        Vec x = v2(xv, 0.0);
        for (const Vec& lam : L.sample(0.0, x, 4))
            CHECK(lam.norm() <= C * (1.0 + x.norm()) + 1e-10);
    }
}

TEST_CASE("box control set must contain 0") {
    CHECK_THROWS_AS(ControlSetSpec::box(v2(0.5, -1), v2(1, 1)), DomainError);
}

TEST_CASE("eval_g: power penalty at zero and on the domain") {
    PenaltySpec g = PenaltySpec::power(2.0);
    ControlSetSpec L = ControlSetSpec::ball(2, 5.0);
    CHECK(eval_g(g, L, 0.0, v2(0, 0), v2(0, 0)) == doctest::Approx(0.0));
    CHECK(eval_g(g, L, 0.0, v2(0, 0), v2(2, 0)) == doctest::Approx(2.0));
}

TEST_CASE("eval_g returns +inf off the domain") {
    PenaltySpec g = PenaltySpec::power(2.0);
    ControlSetSpec L = ControlSetSpec::ball(2, 1.0);
    CHECK(std::isinf(eval_g(g, L, 0.0, v2(0, 0), v2(2, 0))));
}

TEST_CASE("penalty normalization certificates") {
    CHECK(PenaltySpec::zero().nonnegative_normalized());
    CHECK(PenaltySpec::power(3.0).nonnegative_normalized());
    CHECK(PenaltySpec::constant(0.0).nonnegative_normalized());
    CHECK(!PenaltySpec::constant(1.0).nonnegative_normalized());
    Mat Q(2, 2);
    Q << 1, 0, 0, 2;
    CHECK(PenaltySpec::quadratic_form(Q, 10, 0).nonnegative_normalized());
    Q(1, 1) = -2;
    CHECK(!PenaltySpec::quadratic_form(Q, 10, 0).nonnegative_normalized());
}

TEST_CASE("grid validation") {
    GridSpec g = GridSpec::make(0.0, 1.0, 4, v1(-1), v1(1), 11);
    CHECK_NOTHROW(g.validate());
    GridSpec bad = g;
    bad.t1 = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = g;
    bad.nx = {2};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = g;
    bad.state_hi = v1(-2);
    CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("grid time index and mismatch error") {
    GridSpec g = GridSpec::make(0.0, 1.0, 4, v1(-1), v1(1), 11);
    CHECK(g.time_index(0.25) == 1);
    CHECK(g.time_index(1.0) == 4);
    CHECK_THROWS_AS(g.time_index(0.3), GridMismatchError);
}

TEST_CASE("grid interpolation is exact for linear functions, extrapolates outside") {
    GridSpec g = GridSpec::make(0.0, 1.0, 1, v2(-1, -2), v2(1, 2), 5);
    Vec values(g.num_nodes());
    for (int j = 0; j < g.num_nodes(); ++j) {
        Vec x = g.node(j);
        values(j) = 2.0 * x(0) - 0.5 * x(1) + 3.0;
    }
    auto f = [](double a, double b) { return 2.0 * a - 0.5 * b + 3.0; };
    CHECK(g.interpolate(values, v2(0.37, -1.1)) == doctest::Approx(f(0.37, -1.1)));
    CHECK(g.interpolate(values, v2(-1.0, 2.0)) == doctest::Approx(f(-1.0, 2.0)));
    // outside the box: linear extrapolation stays exact for linear data
    CHECK(g.interpolate(values, v2(1.8, -3.0)) == doctest::Approx(f(1.8, -3.0)));
}

TEST_CASE("grid flatten/unflatten round trip") {
    GridSpec g = GridSpec::make(0.0, 1.0, 1, v2(-1, -1), v2(1, 1), 4);
    g.nx = {4, 7};
    for (int j = 0; j < g.num_nodes(); ++j) CHECK(g.flatten(g.unflatten(j)) == j);
}

TEST_CASE("shipped presets: a positive definite with operator norm within the bound") {
    for (const std::string& name : preset_names()) {
        ProblemConfig cfg = preset(name);
        const GridSpec& grid = cfg.grid;
        double worst_min = std::numeric_limits<double>::infinity();
        double worst_norm = 0.0;
        for (int j = 0; j < grid.num_nodes(); j += 7) {
            Mat a = eval_a(cfg.diffusion, grid.t0, grid.node(j));
            Eigen::SelfAdjointEigenSolver<Mat> es(a);
            worst_min = std::min(worst_min, es.eigenvalues().minCoeff());
            worst_norm = std::max(worst_norm, es.eigenvalues().cwiseAbs().maxCoeff());
        }
        CAPTURE(name);
        CHECK(worst_min > 0.0);
        CHECK(worst_norm <= cfg.diffusion.sigma_bound * cfg.diffusion.sigma_bound + 1e-9);
    }
}
