#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tcproc/types.hpp"

namespace tcproc {

/// Volatility field sigma(t,x) of the uncontrolled diffusion, together with
/// the uniform operator-norm bound A on a = sigma sigma^*.  An optional base
/// drift covers markets whose uncontrolled dynamics are not driftless.
struct DiffusionSpec {
    int dim = 1;
    std::function<Mat(double, const Vec&)> sigma;
    std::function<Vec(double, const Vec&)> base_drift;  // null means zero
    double sigma_bound = 1.0;                           // A, operator norm of sigma
    std::string name = "diffusion";

    Vec drift0(double t, const Vec& x) const;

    static DiffusionSpec constant(const Mat& s);
    // sigma_ii(t,x) = clamp(offset_i + slope_i * x_i, lo, hi), off-diagonal zero.
    static DiffusionSpec diagonal_affine(const Vec& offset, const Vec& slope, double lo,
                                         double hi);
    // Diagonal sigma with per-axis values interpolated in x_i from a 1-D table.
    static DiffusionSpec table_interpolated(const Vec& knots, const Mat& values);
};

/// a(t,x) = sigma sigma^*, symmetrized on return.
Mat eval_a(const DiffusionSpec& spec, double t, const Vec& x);

/// Multivalued control-set mapping Lambda(t,x).  All variants are closed,
/// convex and contain 0.
struct ControlSetSpec {
    enum class Kind { Point, Ball, Box, LinearConstraint, GrowthTruncated };

    Kind kind = Kind::Point;
    int dim = 1;

    double radius = 0.0;  // Ball
    Vec lo, hi;           // Box (must contain 0 componentwise)

    // LinearConstraint: {(alpha,nu) in R^{2n} : alpha_i sqrt(1-rho^2) + nu_i rho = 0},
    // intersected with the ball ||lambda|| <= norm_cap(t,x).
    std::function<double(double, const Vec&)> rho;
    std::function<double(double, const Vec&)> norm_cap;

    // GrowthTruncated: inner set clipped to ||lambda|| <= growth_C (1 + ||x||).
    std::shared_ptr<ControlSetSpec> inner;
    double growth_C = 0.0;

    bool contains(double t, const Vec& x, const Vec& lambda, double tol = 1e-10) const;
    Vec project(double t, const Vec& x, const Vec& lambda) const;
    std::vector<Vec> sample(double t, const Vec& x, int resolution) const;
    // Upper bound on ||lambda|| over Lambda(t,x); used for CFL bounds and growth
    // certificates.
    double norm_bound(double t, const Vec& x) const;

    static ControlSetSpec point(int dim);
    static ControlSetSpec ball(int dim, double K);
    static ControlSetSpec box(const Vec& lo, const Vec& hi);
    static ControlSetSpec linear_constraint(int n,
                                            std::function<double(double, const Vec&)> rho,
                                            std::function<double(double, const Vec&)> cap);
    static ControlSetSpec growth_truncated(ControlSetSpec inner, double C);
};

/// Penalty integrand g(t,x,lambda), finite exactly on Lambda(t,x).
struct PenaltySpec {
    enum class Kind { Zero, Constant, Power, QuadraticForm, Custom };

    Kind kind = Kind::Zero;
    double c = 0.0;       // Constant
    double p = 2.0;       // Power: ||lambda||^p / p
    Mat quadratic;        // QuadraticForm: 0.5 lambda^* Q lambda
    std::function<double(double, const Vec&, const Vec&)> custom;

    double growth_C = 0.0;  // certificate: sup_Lambda |g| <= growth_C (1+||x||^growth_m)
    int growth_m = 0;

    // Finite value ignoring domain membership.
    double eval_on_domain(double t, const Vec& x, const Vec& lambda) const;
    double value_at_zero(double t, const Vec& x, int control_dim) const;
    bool nonnegative_normalized() const;

    static PenaltySpec zero();
    static PenaltySpec constant(double c);
    static PenaltySpec power(double p, double growth_C = 0.0, int growth_m = 0);
    static PenaltySpec quadratic_form(const Mat& Q, double growth_C, int growth_m);
};

/// g extended by +inf off Lambda(t,x).
double eval_g(const PenaltySpec& g, const ControlSetSpec& Lambda, double t, const Vec& x,
              const Vec& lambda, double tol = 1e-10);

/// Truncated space-time box with per-axis node counts.
struct GridSpec {
    double t0 = 0.0;
    double t1 = 1.0;
    int nt = 1;
    Vec state_lo, state_hi;
    std::vector<int> nx;
    int control_resolution = 8;

    void validate() const;
    int dim() const { return static_cast<int>(nx.size()); }
    double dt() const { return (t1 - t0) / nt; }
    double time(int i) const { return t0 + i * dt(); }
    int time_index(double t, double tol = 1e-9) const;  // GridMismatch if off-grid
    double dx(int axis) const;
    int num_nodes() const;
    Vec node(int flat) const;
    std::vector<int> unflatten(int flat) const;
    int flatten(const std::vector<int>& idx) const;

    // Multilinear interpolation of nodal values at an arbitrary point; cells are
    // clamped so that points outside the box are linearly extrapolated.
    double interpolate(const Vec& values, const Vec& point) const;
    bool in_inner_half_box(const Vec& x) const;
    bool interior(const std::vector<int>& idx) const;

    static GridSpec make(double t0, double t1, int nt, const Vec& lo, const Vec& hi, int nx,
                         int control_resolution = 8);
};

}  // namespace tcproc
