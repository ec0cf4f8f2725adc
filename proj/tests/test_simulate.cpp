#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tcproc/simulate.hpp"

using namespace tcproc;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

struct Setup {
    DiffusionSpec diff;
    ControlSetSpec Lambda;
    GridSpec grid;
    MarkovControl zero;
};

Setup make_setup(double sigma, double t1 = 1.0, int nt = 64, double box = 6.0) {
    Setup s{DiffusionSpec::constant(Mat::Constant(1, 1, sigma)), ControlSetSpec::ball(1, 2.0),
            GridSpec::make(0.0, t1, nt, v1(-box), v1(box), 9), MarkovControl{}};
    s.zero = zero_control(1, 0.0, t1, s.grid.state_lo, s.grid.state_hi);
    return s;
}

double col_mean(const Mat& row) { return row.mean(); }

}  // namespace

TEST_CASE("terminal mean and variance match the Gaussian law of sigma W_t") {
    Setup s = make_setup(0.3);
    const int npaths = 100000;
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.5), s.grid, npaths, 11);
    Vec xT = b.states.back().row(0).transpose();
    double mean = xT.mean();
    double var = (xT.array() - mean).square().sum() / (npaths - 1);
    double se = 0.3 / std::sqrt(static_cast<double>(npaths));
    CHECK(std::abs(mean - 0.5) < 4.0 * se);
    CHECK(var == doctest::Approx(0.09).epsilon(0.05));
}

TEST_CASE("a constant control tilts the drift by sigma * lambda") {
    Setup s = make_setup(0.4);
    MarkovControl tilt = constant_control(Selector::constant(v1(0.5)), 0.0, 1.0,
                                          s.grid.state_lo, s.grid.state_hi);
    const int npaths = 50000;
    PathBatch b = simulate_paths(s.diff, s.Lambda, tilt, 0.0, v1(0.0), s.grid, npaths, 3);
    double mean = col_mean(b.states.back().row(0));
    double se = 0.4 / std::sqrt(static_cast<double>(npaths));
    CHECK(std::abs(mean - 0.4 * 0.5) < 4.0 * se);  // E X_1 = sigma lambda t = 0.2
}

TEST_CASE("identical seeds reproduce paths; prefixes are stable under path-count growth") {
    Setup s = make_setup(0.5, 0.5, 16);
    PathBatch a = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.1), s.grid, 40, 7);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.1), s.grid, 40, 7);
    PathBatch big = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.1), s.grid, 80, 7);
    PathBatch other = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.1), s.grid, 40, 8);
    for (size_t k = 0; k < a.states.size(); ++k) {
        CHECK((a.states[k] - b.states[k]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.states[k] - big.states[k].leftCols(40)).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((a.states.back() - other.states.back()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("paths start exactly at y on the grid times") {
    Setup s = make_setup(0.2, 0.25, 10);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(-1.25), s.grid, 9, 1);
    CHECK(b.times.size() == 11);
    CHECK(b.times[0] == 0.0);
    CHECK(b.times[4] == doctest::Approx(0.1));
    for (int j = 0; j < 9; ++j) CHECK(b.states[0](0, j) == -1.25);
    CHECK(b.start(0) == -1.25);
    CHECK(b.control_id == "zero");
}

TEST_CASE("paths leaving the box are absorbed at the boundary") {
    Setup s = make_setup(1.5, 1.0, 32, 0.25);  // sigma large vs box [-0.25, 0.25]
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, 200, 5);
    int absorbed = 0;
    for (int j = 0; j < 200; ++j) {
        for (size_t k = 1; k < b.states.size(); ++k) {
            double x = b.states[k](0, j);
            CHECK(x >= -0.25);
            CHECK(x <= 0.25);
            if (x == 0.25 || x == -0.25) {
                // frozen from the first boundary hit onward
                for (size_t m = k; m < b.states.size(); ++m)
                    CHECK(b.states[m](0, j) == x);
                ++absorbed;
                break;
            }
        }
    }
    CHECK(absorbed > 150);  // with sigma = 1.5 nearly every path exits
}

TEST_CASE("Girsanov weight of the zero control is identically zero") {
    Setup s = make_setup(0.3);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, 100, 2);
    Vec w = girsanov_log_weight(b, s.diff, s.Lambda, s.zero);
    CHECK(w.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Girsanov weights average to one") {
    Setup s = make_setup(0.4);
    const int npaths = 40000;
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, npaths, 17);
    MarkovControl tilt = constant_control(Selector::constant(v1(0.7)), 0.0, 1.0,
                                          s.grid.state_lo, s.grid.state_hi);
    Vec w = girsanov_log_weight(b, s.diff, s.Lambda, tilt).array().exp();
    double mean = w.mean();
    double se = std::sqrt((w.array() - mean).square().sum() / (npaths - 1) / npaths);
    CHECK(std::abs(mean - 1.0) < 4.0 * se);
}

TEST_CASE("reweighting the base measure reproduces the tilted law") {
    Setup s = make_setup(0.4);
    const int npaths = 40000;
    MarkovControl tilt = constant_control(Selector::constant(v1(0.6)), 0.0, 1.0,
                                          s.grid.state_lo, s.grid.state_hi);
    PathBatch base = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, npaths, 23);
    PathBatch direct =
        simulate_paths(s.diff, s.Lambda, tilt, 0.0, v1(0.0), s.grid, npaths, 29);
    Vec w = girsanov_log_weight(base, s.diff, s.Lambda, tilt).array().exp();

    Vec h_base = base.states.back().row(0).transpose();
    Vec h_dir = direct.states.back().row(0).transpose();
    Vec wh = w.cwiseProduct(h_base);
    double m_re = wh.mean();
    double m_di = h_dir.mean();
    double se_re = std::sqrt((wh.array() - m_re).square().sum() / (npaths - 1) / npaths);
    double se_di = std::sqrt((h_dir.array() - m_di).square().sum() / (npaths - 1) / npaths);
    CHECK(std::abs(m_re - m_di) < 4.0 * (se_re + se_di));
}

TEST_CASE("Girsanov rejects batches simulated under a non-zero control") {
    Setup s = make_setup(0.4, 0.5, 8);
    MarkovControl tilt = constant_control(Selector::constant(v1(0.2)), 0.0, 0.5,
                                          s.grid.state_lo, s.grid.state_hi);
    PathBatch b = simulate_paths(s.diff, s.Lambda, tilt, 0.0, v1(0.0), s.grid, 10, 1);
    CHECK_THROWS_AS(girsanov_log_weight(b, s.diff, s.Lambda, tilt), DomainError);
}

TEST_CASE("penalty accumulation: constant integrand integrates exactly") {
    Setup s = make_setup(0.3, 1.0, 40);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, 25, 4);
    PenaltySpec g = PenaltySpec::constant(1.3);
    Vec pen = accumulate_penalty(b, g, s.Lambda, s.zero, 0.25, 0.75);
    for (int j = 0; j < 25; ++j) CHECK(pen(j) == doctest::Approx(1.3 * 0.5).epsilon(1e-12));

    Vec none = accumulate_penalty(b, PenaltySpec::zero(), s.Lambda, s.zero, 0.0, 1.0);
    CHECK(none.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("penalty accumulation is additive over adjacent windows") {
    Setup s = make_setup(0.5, 1.0, 32);
    MarkovControl tilt = constant_control(Selector::constant(v1(1.1)), 0.0, 1.0,
                                          s.grid.state_lo, s.grid.state_hi);
    PathBatch b = simulate_paths(s.diff, s.Lambda, tilt, 0.0, v1(0.0), s.grid, 30, 9);
    PenaltySpec g = PenaltySpec::power(2.0);
    Vec left = accumulate_penalty(b, g, s.Lambda, tilt, 0.0, 0.5);
    Vec right = accumulate_penalty(b, g, s.Lambda, tilt, 0.5, 1.0);
    Vec whole = accumulate_penalty(b, g, s.Lambda, tilt, 0.0, 1.0);
    CHECK((left + right - whole).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("penalty accumulation rejects off-domain controls") {
    Setup s = make_setup(0.3, 0.5, 8);
    ControlSetSpec small = ControlSetSpec::ball(1, 1.0);
    MarkovControl outside = constant_control(Selector::constant(v1(1.5)), 0.0, 0.5,
                                             s.grid.state_lo, s.grid.state_hi);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, 5, 1);
    CHECK_THROWS_AS(accumulate_penalty(b, PenaltySpec::power(2.0), small, outside, 0.0, 0.5),
                    OffDomainControlError);
}

TEST_CASE("exponential-martingale defect vanishes identically at theta = 0") {
    Setup s = make_setup(0.4, 1.0, 32);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, 400, 13);
    DefectReport r = martingale_defect(b, s.diff, s.Lambda, s.zero, v1(0.0), 0.25, 0.75);
    CHECK(r.max_abs_defect == 0.0);
}

TEST_CASE("exponential-martingale defect is statistically zero under the base measure") {
    Setup s = make_setup(0.4, 1.0, 64);
    const int npaths = 40000;
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, npaths, 31);
    DefectReport r = martingale_defect(b, s.diff, s.Lambda, s.zero, v1(1.0), 0.25, 1.0);
    for (size_t i = 0; i < r.bin_defects.size(); ++i)
        CHECK(std::abs(r.bin_defects[i]) < 4.0 * r.bin_stderrs[i] + 2e-3);
}

TEST_CASE("exponential-martingale defect is statistically zero under a tilted control") {
    Setup s = make_setup(0.4, 1.0, 64);
    MarkovControl tilt = constant_control(Selector::constant(v1(0.5)), 0.0, 1.0,
                                          s.grid.state_lo, s.grid.state_hi);
    const int npaths = 40000;
    PathBatch b = simulate_paths(s.diff, s.Lambda, tilt, 0.0, v1(0.0), s.grid, npaths, 37);
    DefectReport r = martingale_defect(b, s.diff, s.Lambda, tilt, v1(1.0), 0.25, 1.0);
    for (size_t i = 0; i < r.bin_defects.size(); ++i)
        CHECK(std::abs(r.bin_defects[i]) < 4.0 * r.bin_stderrs[i] + 2e-3);
}

TEST_CASE("windowed supremum moments respect the margin bound") {
    Setup s = make_setup(0.5, 1.0, 64);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.5), s.grid, 20000, 41);
    MomentReport r1 = moment_bound_check(b, 1, 8.0);
    CHECK(r1.pass);
    CHECK(r1.window_lengths.size() == 4);
    // longer windows accumulate more dispersion
    CHECK(r1.estimates.front() > r1.estimates.back());
    for (size_t i = 0; i + 1 < r1.window_lengths.size(); ++i)
        CHECK(r1.window_lengths[i] > r1.window_lengths[i + 1]);

    MomentReport r2 = moment_bound_check(b, 2, 50.0);
    CHECK(r2.pass);
    CHECK_THROWS_AS(moment_bound_check(b, 3, 1.0), DomainError);
}

TEST_CASE("an undersized margin constant is reported as a failure") {
    Setup s = make_setup(0.5, 1.0, 64);
    PathBatch b = simulate_paths(s.diff, s.Lambda, s.zero, 0.0, v1(0.0), s.grid, 5000, 43);
    // E sup ||X_t - X_u||^2 ~ sigma^2 * len; K = 0.01 is far below it
    MomentReport r = moment_bound_check(b, 1, 0.01);
    CHECK(!r.pass);
}
