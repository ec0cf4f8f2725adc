#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcproc/controls.hpp"
#include "tcproc/core_model.hpp"

namespace tcproc {

/// Write-once batch of Euler-Maruyama paths.  states[k] holds the n x paths
/// matrix of path values at times[k].
struct PathBatch {
    std::vector<double> times;
    std::vector<Mat> states;
    Vec log_weights;  // empty unless girsanov_log_weight has run
    Vec penalties;    // empty unless accumulate_penalty has run
    std::uint64_t seed = 0;
    std::string control_id;
    Vec start;

    int n_paths() const { return states.empty() ? 0 : static_cast<int>(states[0].cols()); }
    int dim() const { return states.empty() ? 0 : static_cast<int>(states[0].rows()); }
    int n_steps() const { return static_cast<int>(times.size()) - 1; }
};

/// Euler-Maruyama under P^{sigma,mu}: X_{k+1} = X_k + (b0 + sigma mu) dt + sigma sqrt(dt) xi.
/// mu and sigma are evaluated at the left endpoint.  Paths leaving the grid box are
/// absorbed at their exit point.  Per-path RNG substreams are derived from
/// (seed, path index), so changing the path count never reshuffles existing paths.
PathBatch simulate_paths(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                         const MarkovControl& ctrl, double r, const Vec& y,
                         const GridSpec& grid, int n_paths, std::uint64_t seed);

/// Discrete Girsanov log-density sum mu^* sigma^{-1} dX - 1/2 sum ||mu||^2 dt for a
/// batch simulated under the base measure (mu = 0).
Vec girsanov_log_weight(const PathBatch& batch, const DiffusionSpec& diff,
                        const ControlSetSpec& Lambda, const MarkovControl& mu);

/// Left-endpoint Riemann sum of g(u, X_u, mu_u) over grid times in [s,t).
Vec accumulate_penalty(const PathBatch& batch, const PenaltySpec& g,
                       const ControlSetSpec& Lambda, const MarkovControl& mu, double s,
                       double t);

struct DefectReport {
    double max_abs_defect = 0.0;
    double max_stderr = 0.0;
    std::vector<double> bin_defects;
    std::vector<double> bin_stderrs;
};

/// Estimates E[M_{t2}/M_{t1} | bins of X_{t1}] - 1 for the discrete exponential
/// martingale of the drifted martingale problem, for a batch simulated under the
/// Markov control lambda.
DefectReport martingale_defect(const PathBatch& batch, const DiffusionSpec& diff,
                               const ControlSetSpec& Lambda, const MarkovControl& lambda,
                               const Vec& theta, double t1, double t2, int n_bins = 8);

struct MomentReport {
    std::vector<double> window_lengths;
    std::vector<double> estimates;  // E[sup_{s<=u<=t} ||X_t - X_u||^{2q}]
    std::vector<double> bounds;     // K_margin (t-s)^q (||y||^{2q}+1)
    bool pass = true;
};

/// Windowed supremum-moment estimates over dyadic [s,t] windows ending at the
/// terminal time, reported against the margin bound.
MomentReport moment_bound_check(const PathBatch& batch, int q, double K_margin,
                                int n_windows = 4);

}  // namespace tcproc
