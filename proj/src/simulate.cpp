#include "tcproc/simulate.hpp"

#include <cmath>
#include <random>

namespace tcproc {

namespace {

std::mt19937_64 path_engine(std::uint64_t seed, int path) {
    std::seed_seq seq{static_cast<std::uint64_t>(0x9e3779b97f4a7c15ULL), seed,
                      static_cast<std::uint64_t>(path)};
    return std::mt19937_64(seq);
}

// Indices of the control subdivision times on the simulation grid.
std::vector<int> subdivision_grid_indices(const MarkovControl& ctrl, const GridSpec& grid) {
    std::vector<int> idx;
    idx.reserve(ctrl.subdivision.size());
    for (double s : ctrl.subdivision) idx.push_back(grid.time_index(s));
    return idx;
}

Mat sigma_at(const DiffusionSpec& diff, double t, const Vec& x) {
    Mat s = diff.sigma(t, x);
    if (!s.allFinite()) throw NonFiniteError("sigma produced a non-finite entry");
    return s;
}

bool inside_box(const Vec& x, const GridSpec& grid) {
    return (x.array() >= grid.state_lo.array()).all() &&
           (x.array() <= grid.state_hi.array()).all();
}

}  // namespace

PathBatch simulate_paths(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                         const MarkovControl& ctrl, double r, const Vec& y,
                         const GridSpec& grid, int n_paths, std::uint64_t seed) {
    grid.validate();
    if (std::abs(grid.t0 - r) > 1e-12)
        throw GridMismatchError("simulate_paths: grid must start at r");
    if (std::abs(ctrl.subdivision.front() - r) > 1e-12 ||
        ctrl.subdivision.back() < grid.t1 - 1e-12)
        throw GridMismatchError("simulate_paths: control not defined on [r,t]");

    const int n = diff.dim;
    const int nt = grid.nt;
    const double dt = grid.dt();
    const double sq_dt = std::sqrt(dt);
    std::vector<int> sub_idx = subdivision_grid_indices(ctrl, grid);

    PathBatch batch;
    batch.times.resize(nt + 1);
    for (int k = 0; k <= nt; ++k) batch.times[k] = grid.time(k);
    batch.states.assign(nt + 1, Mat::Zero(n, n_paths));
    batch.seed = seed;
    batch.control_id = ctrl.id;
    batch.start = y;

    for (int j = 0; j < n_paths; ++j) {
        auto eng = path_engine(seed, j);
        std::normal_distribution<double> normal(0.0, 1.0);
        Vec x = y;
        bool absorbed = false;
        std::vector<Vec> states_sub(ctrl.subdivision.size());
        size_t next_sub = 0;
        batch.states[0].col(j) = x;
        for (int k = 0; k < nt; ++k) {
            double u = grid.time(k);
            while (next_sub < sub_idx.size() && sub_idx[next_sub] <= k) {
                states_sub[next_sub] = x;
                ++next_sub;
            }
            if (!absorbed) {
                Vec mu = ctrl.eval(Lambda, u, states_sub, x);
                Mat s = sigma_at(diff, u, x);
                Vec xi(n);
                for (int c = 0; c < n; ++c) xi(c) = normal(eng);
                x = x + (diff.drift0(u, x) + s * mu) * dt + s * (sq_dt * xi);
                if (!x.allFinite())
                    throw NonFiniteError("simulate_paths: path left representable range");
                if (!inside_box(x, grid)) {
                    x = x.cwiseMax(grid.state_lo).cwiseMin(grid.state_hi);
                    absorbed = true;
                }
            }
            batch.states[k + 1].col(j) = x;
        }
    }
    return batch;
}

Vec girsanov_log_weight(const PathBatch& batch, const DiffusionSpec& diff,
                        const ControlSetSpec& Lambda, const MarkovControl& mu) {
    if (batch.control_id != "zero")
        throw DomainError("girsanov_log_weight: batch must be simulated under mu = 0");
    const int n = batch.dim();
    const int npaths = batch.n_paths();
    const int nt = batch.n_steps();
    const double dt = batch.times[1] - batch.times[0];

    Vec out = Vec::Zero(npaths);
    for (int j = 0; j < npaths; ++j) {
        std::vector<Vec> states_sub(mu.subdivision.size());
        size_t next_sub = 0;
        double acc = 0.0;
        for (int k = 0; k < nt; ++k) {
            double u = batch.times[k];
            Vec x = batch.states[k].col(j);
            while (next_sub < mu.subdivision.size() &&
                   mu.subdivision[next_sub] <= u + 1e-12) {
                states_sub[next_sub] = x;
                ++next_sub;
            }
            Vec m = mu.eval(Lambda, u, states_sub, x);
            Mat s = diff.sigma(u, x);
            Eigen::FullPivLU<Mat> lu(s);
            if (!lu.isInvertible())
                throw SingularSigmaError("girsanov_log_weight: sigma not invertible");
            Vec dX = batch.states[k + 1].col(j) - x;
            acc += m.dot(lu.solve(dX)) - 0.5 * m.squaredNorm() * dt;
        }
        out(j) = acc;
        if (!std::isfinite(acc))
            throw NonFiniteError("girsanov_log_weight: non-finite log weight");
    }
    return out;
}

Vec accumulate_penalty(const PathBatch& batch, const PenaltySpec& g,
                       const ControlSetSpec& Lambda, const MarkovControl& mu, double s,
                       double t) {
    const int nt = batch.n_steps();
    const double dt = batch.times[1] - batch.times[0];
    int ks = -1, kt = -1;
    for (int k = 0; k <= nt; ++k) {
        if (std::abs(batch.times[k] - s) < 1e-9) ks = k;
        if (std::abs(batch.times[k] - t) < 1e-9) kt = k;
    }
    if (ks < 0 || kt < 0 || ks > kt)
        throw GridMismatchError("accumulate_penalty: [s,t] not on the batch grid");

    const int npaths = batch.n_paths();
    Vec out = Vec::Zero(npaths);
    for (int j = 0; j < npaths; ++j) {
        std::vector<Vec> states_sub(mu.subdivision.size());
        size_t next_sub = 0;
        double acc = 0.0;
        for (int k = 0; k < kt; ++k) {
            double u = batch.times[k];
            Vec x = batch.states[k].col(j);
            while (next_sub < mu.subdivision.size() &&
                   mu.subdivision[next_sub] <= u + 1e-12) {
                states_sub[next_sub] = x;
                ++next_sub;
            }
            if (k < ks) continue;
            Vec m = mu.eval(Lambda, u, states_sub, x);
            double gv = eval_g(g, Lambda, u, x, m, 1e-8);
            if (std::isinf(gv))
                throw OffDomainControlError("accumulate_penalty: control outside Lambda");
            acc += gv * dt;
        }
        out(j) = acc;
    }
    return out;
}

DefectReport martingale_defect(const PathBatch& batch, const DiffusionSpec& diff,
                               const ControlSetSpec& Lambda, const MarkovControl& lambda,
                               const Vec& theta, double t1, double t2, int n_bins) {
    const int nt = batch.n_steps();
    const double dt = batch.times[1] - batch.times[0];
    int k1 = -1, k2 = -1;
    for (int k = 0; k <= nt; ++k) {
        if (std::abs(batch.times[k] - t1) < 1e-9) k1 = k;
        if (std::abs(batch.times[k] - t2) < 1e-9) k2 = k;
    }
    if (k1 < 0 || k2 < 0 || k1 >= k2)
        throw GridMismatchError("martingale_defect: checkpoints not on the batch grid");

    const int npaths = batch.n_paths();
    Vec log_ratio(npaths), anchor(npaths);
    for (int j = 0; j < npaths; ++j) {
        std::vector<Vec> states_sub(lambda.subdivision.size());
        size_t next_sub = 0;
        double acc = theta.dot(batch.states[k2].col(j) - batch.states[k1].col(j));
        for (int k = 0; k < k2; ++k) {
            double u = batch.times[k];
            Vec x = batch.states[k].col(j);
            while (next_sub < lambda.subdivision.size() &&
                   lambda.subdivision[next_sub] <= u + 1e-12) {
                states_sub[next_sub] = x;
                ++next_sub;
            }
            if (k < k1) continue;
            Vec lam = lambda.eval(Lambda, u, states_sub, x);
            Mat s = diff.sigma(u, x);
            Mat a = eval_a(diff, u, x);
            acc -= (theta.dot(s * lam) + 0.5 * theta.dot(a * theta)) * dt;
        }
        log_ratio(j) = acc;
        anchor(j) = batch.states[k1](0, j);
    }

    // quantile bins on the first coordinate at t1
    std::vector<int> order(npaths);
    for (int j = 0; j < npaths; ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return anchor(a) < anchor(b); });

    DefectReport report;
    for (int b = 0; b < n_bins; ++b) {
        int lo = b * npaths / n_bins;
        int hi = (b + 1) * npaths / n_bins;
        if (hi <= lo) continue;
        double mean = 0.0, m2 = 0.0;
        int count = 0;
        for (int i = lo; i < hi; ++i) {
            double v = std::exp(log_ratio(order[i]));
            ++count;
            double delta = v - mean;
            mean += delta / count;
            m2 += delta * (v - mean);
        }
        double se = count > 1 ? std::sqrt(m2 / (count - 1) / count) : 0.0;
        report.bin_defects.push_back(mean - 1.0);
        report.bin_stderrs.push_back(se);
        if (std::abs(mean - 1.0) > report.max_abs_defect) {
            report.max_abs_defect = std::abs(mean - 1.0);
            report.max_stderr = se;
        }
    }
    return report;
}

MomentReport moment_bound_check(const PathBatch& batch, int q, double K_margin,
                                int n_windows) {
    if (q != 1 && q != 2) throw DomainError("moment_bound_check: q must be 1 or 2");
    const int nt = batch.n_steps();
    const int npaths = batch.n_paths();
    const double span = batch.times.back() - batch.times.front();
    double ynorm2q = std::pow(batch.start.norm(), 2 * q);

    MomentReport report;
    for (int w = 1; w <= n_windows; ++w) {
        int steps = std::max(1, nt >> w);
        int ks = nt - steps;
        double length = batch.times[nt] - batch.times[ks];
        double mean = 0.0;
        for (int j = 0; j < npaths; ++j) {
            double sup = 0.0;
            Vec xT = batch.states[nt].col(j);
            for (int k = ks; k <= nt; ++k) {
                double d = (xT - batch.states[k].col(j)).norm();
                sup = std::max(sup, std::pow(d, 2 * q));
            }
            mean += sup;
        }
        mean /= npaths;
        double bound = K_margin * std::pow(length, q) * (ynorm2q + 1.0);
        report.window_lengths.push_back(length);
        report.estimates.push_back(mean);
        report.bounds.push_back(bound);
        if (mean > bound) report.pass = false;
    }
    (void)span;
    return report;
}

}  // namespace tcproc
