#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tcproc/controls.hpp"
#include "tcproc/core_model.hpp"
#include "tcproc/simulate.hpp"

namespace tcproc {

/// Terminal payoff h, bounded below on the truncated box; unbounded-above
/// payoffs are capped at `cap`.
struct PayoffSpec {
    enum class Kind { Call, Put, Power, Constant, Table };

    Kind kind = Kind::Constant;
    double strike = 0.0;
    double c = 0.0;
    double exponent = 1.0;  // Power: x_coordinate^exponent
    int coordinate = 0;
    double cap = std::numeric_limits<double>::infinity();
    std::optional<GridSpec> table_grid;
    Vec table_values;
    double bounded_below = 0.0;

    double eval(const Vec& x) const;

    static PayoffSpec call(double strike, int coordinate = 0,
                           double cap = std::numeric_limits<double>::infinity());
    static PayoffSpec put(double strike, int coordinate = 0);
    static PayoffSpec power(double exponent, int coordinate = 0,
                            double cap = std::numeric_limits<double>::infinity());
    static PayoffSpec constant(double c);
    static PayoffSpec table(const GridSpec& grid, const Vec& values);
    static PayoffSpec negate(const PayoffSpec& h, const GridSpec& grid);
};

enum class TransitionScheme { LocalQuadrature, MarkovChain };

/// Discrete value function of the procedure on the grid, with the per-node
/// optimizing control.
struct ValueField {
    GridSpec grid;
    std::vector<Vec> values;   // nt+1 slices, one value per state node
    std::vector<Mat> argmax;   // nt slices, control dim x nodes
    PayoffSpec terminal;
};

/// Matched-moment transition points for one step: displaced nodes y_k with
/// weights w_k (nonnegative, summing to 1), mean x + b dt and covariance a dt.
struct TransitionStencil {
    std::vector<Vec> points;
    std::vector<double> weights;
};

/// When a grid is supplied and a(t,x) is diagonal, the diffusion displacements
/// are snapped to whole grid cells (a trinomial per axis with matched variance),
/// which makes the step exact for quadratics evaluated on the lattice; otherwise
/// the stencil uses +-sqrt(n dt) times the Cholesky columns of a.
TransitionStencil transition_points(const DiffusionSpec& diff, double t, const Vec& x,
                                    const Vec& lambda, double dt,
                                    const GridSpec* grid = nullptr);

/// Backward induction: v(t,.) = h and
/// v(s_i,x) = max_lambda { E[v(s_{i+1}, X) | X_{s_i}=x, drift sigma lambda] - g dt }.
ValueField backward_induction(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                              const PenaltySpec& g, const PayoffSpec& h,
                              const GridSpec& grid, TransitionScheme scheme,
                              int control_resolution = -1);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo estimate of E[h(X_t)] - E[int g du] under a single feasible
/// control; a statistical lower bound for the procedure value.
McEstimate mc_value(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                    const MarkovControl& ctrl, const PenaltySpec& g, const PayoffSpec& h,
                    double r, const Vec& y, const GridSpec& grid, int n_paths,
                    std::uint64_t seed);

/// Wraps the recorded per-node optimizers of a ValueField as a piecewise control.
MarkovControl policy_control(const ValueField& vf, const ControlSetSpec& Lambda);

/// Recomputes Pi_{r,s}(v(s,.)) by backward induction on [r,s] with terminal
/// payoff v(s,.), and returns the max node-wise deviation from v(r,.).
double check_time_consistency(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                              const PenaltySpec& g, const ValueField& vf, double s,
                              TransitionScheme scheme);

struct AxiomReport {
    double monotonicity = 0.0;          // max violation magnitudes (0 = pass)
    double translation_invariance = 0.0;
    double convexity = 0.0;
    double normalization = 0.0;
    double positive_homogeneity = 0.0;  // only populated when g = 0
    bool pass(double tol = 1e-9) const;
};

/// Node-wise dynamic-procedure axioms at the initial slice, checked over payoff
/// pairs, convex-combination weights and translation constants.
AxiomReport check_axioms(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                         const PenaltySpec& g, const GridSpec& grid,
                         TransitionScheme scheme,
                         const std::vector<std::pair<PayoffSpec, PayoffSpec>>& payoff_pairs,
                         const std::vector<double>& thetas,
                         const std::vector<double>& constants,
                         bool throw_on_violation = false);

struct ModulusReport {
    double max_time_increment = 0.0;    // max |v(s_i,x) - v(s_{i+1},x)| over the inner box
    double max_space_quotient = 0.0;    // max |v(s,x+dx) - v(s,x)| / dx
    double sqrt_rate_constant = 0.0;    // fit of sup_x |v(s,x)-h(x)| ~ C sqrt(t-s)
    double rate_exponent = 0.0;         // fitted exponent (reported, not asserted)
};

ModulusReport check_feller_modulus(const ValueField& vf);

}  // namespace tcproc
