#include "tcproc/pde.hpp"

#include <algorithm>
#include <cmath>

namespace tcproc {

namespace {

struct Derivatives {
    Vec grad_centered;
    Vec grad_upwind;  // filled per chosen drift sign
    Mat hessian;      // centered second differences, cross terms by sign splitting
};

// Neighbor value with index offset along one axis; callers keep idx interior.
double at_offset(const GridSpec& grid, const Vec& v, std::vector<int> idx, int axis,
                 int off) {
    idx[axis] += off;
    return v(grid.flatten(idx));
}

double at_offset2(const GridSpec& grid, const Vec& v, std::vector<int> idx, int ax1,
                  int off1, int ax2, int off2) {
    idx[ax1] += off1;
    idx[ax2] += off2;
    return v(grid.flatten(idx));
}

Vec centered_gradient(const GridSpec& grid, const Vec& v, const std::vector<int>& idx) {
    int d = grid.dim();
    Vec g(d);
    for (int k = 0; k < d; ++k)
        g(k) = (at_offset(grid, v, idx, k, +1) - at_offset(grid, v, idx, k, -1)) /
               (2.0 * grid.dx(k));
    return g;
}

Vec upwind_gradient(const GridSpec& grid, const Vec& v, const std::vector<int>& idx,
                    const Vec& drift) {
    int d = grid.dim();
    Vec g(d);
    double center = v(grid.flatten(idx));
    for (int k = 0; k < d; ++k) {
        if (drift(k) >= 0.0)
            g(k) = (at_offset(grid, v, idx, k, +1) - center) / grid.dx(k);
        else
            g(k) = (center - at_offset(grid, v, idx, k, -1)) / grid.dx(k);
    }
    return g;
}

// 1/2 Tr(a D^2 v) with monotone sign-split cross terms (dimension <= 2).
double diffusion_term(const GridSpec& grid, const Vec& v, const std::vector<int>& idx,
                      const Mat& a) {
    int d = grid.dim();
    double center = v(grid.flatten(idx));
    double acc = 0.0;
    for (int k = 0; k < d; ++k) {
        double dx = grid.dx(k);
        acc += 0.5 * a(k, k) *
               (at_offset(grid, v, idx, k, +1) - 2.0 * center +
                at_offset(grid, v, idx, k, -1)) /
               (dx * dx);
    }
    if (d == 2 && a(0, 1) != 0.0) {
        double dxy = grid.dx(0) * grid.dx(1);
        double c = a(0, 1);
        if (c > 0.0) {
            acc += 0.5 * c *
                   (2.0 * center + at_offset2(grid, v, idx, 0, +1, 1, +1) +
                    at_offset2(grid, v, idx, 0, -1, 1, -1) -
                    at_offset(grid, v, idx, 0, +1) - at_offset(grid, v, idx, 0, -1) -
                    at_offset(grid, v, idx, 1, +1) - at_offset(grid, v, idx, 1, -1)) /
                   dxy;
        } else {
            acc += 0.5 * (-c) *
                   (at_offset(grid, v, idx, 0, +1) + at_offset(grid, v, idx, 0, -1) +
                    at_offset(grid, v, idx, 1, +1) + at_offset(grid, v, idx, 1, -1) -
                    2.0 * center - at_offset2(grid, v, idx, 0, +1, 1, -1) -
                    at_offset2(grid, v, idx, 0, -1, 1, +1)) /
                   dxy;
        }
    }
    if (d > 2)
        throw UnsupportedVariantError("pde: dimensions above 2 are not supported");
    return acc;
}

// Stencil-weight audit for the explicit part of the update at one node: every
// neighbor coefficient and the center weight must be nonnegative.  The
// semi-implicit scheme treats diffusion implicitly, so only the drift load is
// explicit there.
void audit_weights(const GridSpec& grid, const Mat& a, const Vec& drift, double dt,
                   bool implicit_diffusion) {
    int d = grid.dim();
    double center_load = 0.0;
    for (int k = 0; k < d; ++k) {
        double dx = grid.dx(k);
        if (!implicit_diffusion) {
            double neighbor = 0.5 * a(k, k) / (dx * dx);
            if (d == 2) neighbor -= 0.5 * std::abs(a(0, 1)) / (grid.dx(0) * grid.dx(1));
            if (neighbor < -1e-12)
                throw NonmonotoneWeightsError("pde: cross term dominates axis diffusion");
            center_load += a(k, k) / (dx * dx);
        }
        center_load += std::abs(drift(k)) / dx;
    }
    if (d == 2 && !implicit_diffusion)
        center_load -= std::abs(a(0, 1)) / (grid.dx(0) * grid.dx(1));
    if (dt * center_load > 1.0 + 1e-12)
        throw CflViolationError("pde: explicit step violates the CFL bound; refine dt");
}

// Fill boundary values by linear extrapolation from already-updated nodes,
// processing nodes with fewer boundary axes first.
void extrapolate_boundary(const GridSpec& grid, Vec& v) {
    int d = grid.dim();
    int nodes = grid.num_nodes();
    for (int pass = 1; pass <= d; ++pass) {
        for (int j = 0; j < nodes; ++j) {
            std::vector<int> idx = grid.unflatten(j);
            int boundary_axes = 0;
            int first_axis = -1, direction = 0;
            for (int k = 0; k < d; ++k) {
                if (idx[k] == 0 || idx[k] == grid.nx[k] - 1) {
                    ++boundary_axes;
                    if (first_axis < 0) {
                        first_axis = k;
                        direction = idx[k] == 0 ? +1 : -1;
                    }
                }
            }
            if (boundary_axes != pass) continue;
            v(j) = 2.0 * at_offset(grid, v, idx, first_axis, direction) -
                   at_offset(grid, v, idx, first_axis, 2 * direction);
        }
    }
}

}  // namespace

PdeField solve_semilinear(const DiffusionSpec& diff, const ConjugateEvaluator& f,
                          const PayoffSpec& h, const GridSpec& grid, PdeScheme scheme) {
    grid.validate();
    if (scheme == PdeScheme::SemiImplicitSplit && grid.dim() != 1)
        throw UnsupportedVariantError("semi-implicit splitting implemented for n = 1");
    const int nodes = grid.num_nodes();
    const double dt = grid.dt();

    PdeField field;
    field.grid = grid;
    field.scheme = scheme;
    field.values.assign(grid.nt + 1, Vec::Zero(nodes));
    for (int j = 0; j < nodes; ++j) field.values[grid.nt](j) = h.eval(grid.node(j));

    for (int i = grid.nt - 1; i >= 0; --i) {
        double t = grid.time(i);
        const Vec& next = field.values[i + 1];
        Vec& cur = field.values[i];
        Vec nonlinear = Vec::Zero(nodes);  // f + b0 . Dv, upwinded
        Vec diffusion = Vec::Zero(nodes);

        for (int j = 0; j < nodes; ++j) {
            std::vector<int> idx = grid.unflatten(j);
            if (!grid.interior(idx)) continue;
            Vec x = grid.node(j);
            Mat s = diff.sigma(t, x);
            Mat a = s * s.transpose();
            Vec b0 = diff.drift0(t, x);

            Vec grad_c = centered_gradient(grid, next, idx);
            ConjugateResult probe = f(t, x, s.transpose() * grad_c);
            Vec lam_star = probe.argmax.size() == s.cols()
                               ? probe.argmax
                               : Vec::Zero(s.cols());
            Vec drift = b0 + s * lam_star;
            audit_weights(grid, a, drift, dt, scheme == PdeScheme::SemiImplicitSplit);

            Vec grad_u = upwind_gradient(grid, next, idx, drift);
            double f_val = f(t, x, s.transpose() * grad_u).value;
            nonlinear(j) = f_val + b0.dot(grad_u);
            diffusion(j) = diffusion_term(grid, next, idx, a);
        }

        if (scheme == PdeScheme::ExplicitUpwind) {
            for (int j = 0; j < nodes; ++j) {
                std::vector<int> idx = grid.unflatten(j);
                if (!grid.interior(idx)) continue;
                cur(j) = next(j) + dt * (diffusion(j) + nonlinear(j));
            }
        } else {
            // implicit diffusion, explicit nonlinearity; linear-extrapolation
            // boundary rows eliminated analytically (second difference vanishes
            // at the first and last interior nodes)
            int nx = grid.nx[0];
            double dx = grid.dx(0);
            Vec rhs(nx), diag(nx), sub(nx), sup(nx);
            for (int j = 1; j < nx - 1; ++j) {
                Vec x = grid.node(j);
                Mat s = diff.sigma(t, x);
                double alpha = 0.5 * (s * s.transpose())(0, 0) * dt / (dx * dx);
                rhs(j) = next(j) + dt * nonlinear(j);
                if (j == 1 || j == nx - 2) {
                    sub(j) = 0.0;
                    sup(j) = 0.0;
                    diag(j) = 1.0;
                } else {
                    sub(j) = -alpha;
                    sup(j) = -alpha;
                    diag(j) = 1.0 + 2.0 * alpha;
                }
            }
            // Thomas on j = 1..nx-2
            for (int j = 2; j < nx - 1; ++j) {
                double m = sub(j) / diag(j - 1);
                diag(j) -= m * sup(j - 1);
                rhs(j) -= m * rhs(j - 1);
            }
            cur(nx - 2) = rhs(nx - 2) / diag(nx - 2);
            for (int j = nx - 3; j >= 1; --j)
                cur(j) = (rhs(j) - sup(j) * cur(j + 1)) / diag(j);
        }
        extrapolate_boundary(grid, cur);
    }

    ResidualReport res = residual_check(grid, field.values, diff, f);
    field.residual_max = res.max_abs;
    field.residual_mean = res.mean_abs;
    return field;
}

PdeField solve_equivalence_mode(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                                const PenaltySpec& g, const PayoffSpec& h,
                                const GridSpec& grid, int control_resolution) {
    grid.validate();
    int res = control_resolution > 0 ? control_resolution : grid.control_resolution;
    const int nodes = grid.num_nodes();
    const double dt = grid.dt();

    PdeField field;
    field.grid = grid;
    field.scheme = PdeScheme::ExplicitUpwind;
    field.values.assign(grid.nt + 1, Vec::Zero(nodes));
    for (int j = 0; j < nodes; ++j) field.values[grid.nt](j) = h.eval(grid.node(j));

    for (int i = grid.nt - 1; i >= 0; --i) {
        double t = grid.time(i);
        const Vec& next = field.values[i + 1];
        for (int j = 0; j < nodes; ++j) {
            Vec x = grid.node(j);
            double best = -std::numeric_limits<double>::infinity();
            // identical arithmetic to the procedure module's induction step:
            // control-independent stencil shifted by sigma lambda dt, clamped
            TransitionStencil st0 =
                transition_points(diff, t, x, Vec::Zero(Lambda.dim), dt, &grid);
            Mat s_mat = diff.sigma(t, x);
            TransitionStencil st = st0;
            for (const Vec& lam : Lambda.sample(t, x, res)) {
                Vec shift = s_mat * lam * dt;
                double acc = 0.0;
                Vec p;
                for (size_t k = 0; k < st.points.size(); ++k) {
                    st.points[k] = st0.points[k] + shift;
                    p = st.points[k].cwiseMax(grid.state_lo).cwiseMin(grid.state_hi);
                    acc += st.weights[k] * grid.interpolate(next, p);
                }
                double val = acc - g.eval_on_domain(t, x, lam) * dt;
                if (val > best) best = val;
            }
            field.values[i](j) = best;
        }
    }
    return field;
}

ResidualReport residual_check(const GridSpec& grid, const std::vector<Vec>& values,
                              const DiffusionSpec& diff, const ConjugateEvaluator& f) {
    ResidualReport report;
    report.min_signed = std::numeric_limits<double>::infinity();
    report.max_signed = -std::numeric_limits<double>::infinity();
    const double dt = grid.dt();
    double sum = 0.0;

    for (int i = 0; i + 1 < static_cast<int>(values.size()); ++i) {
        double t = grid.time(i);
        const Vec& next = values[i + 1];
        for (int j = 0; j < grid.num_nodes(); ++j) {
            std::vector<int> idx = grid.unflatten(j);
            if (!grid.interior(idx)) continue;
            Vec x = grid.node(j);
            if (!grid.in_inner_half_box(x)) continue;
            Mat s = diff.sigma(t, x);
            Mat a = s * s.transpose();
            Vec grad = centered_gradient(grid, next, idx);
            double du = (next(j) - values[i](j)) / dt;
            double residual = -du - diffusion_term(grid, next, idx, a) -
                              diff.drift0(t, x).dot(grad) -
                              f(t, x, s.transpose() * grad).value;
            report.max_abs = std::max(report.max_abs, std::abs(residual));
            report.min_signed = std::min(report.min_signed, residual);
            report.max_signed = std::max(report.max_signed, residual);
            sum += std::abs(residual);
            ++report.nodes_checked;
        }
    }
    if (report.nodes_checked > 0) report.mean_abs = sum / report.nodes_checked;
    return report;
}

DivergenceReport compare_fields(const ValueField& a, const PdeField& b) {
    if (a.grid.num_nodes() != b.grid.num_nodes() || a.grid.nt != b.grid.nt)
        throw GridMismatchError("compare_fields: fields on different grids");
    DivergenceReport report;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i <= a.grid.nt; ++i) {
        double slice_max = 0.0;
        for (int j = 0; j < a.grid.num_nodes(); ++j) {
            if (!a.grid.in_inner_half_box(a.grid.node(j))) continue;
            double d = std::abs(a.values[i](j) - b.values[i](j));
            slice_max = std::max(slice_max, d);
            sum += d;
            ++count;
        }
        report.per_slice_max.push_back(slice_max);
        report.max_diff = std::max(report.max_diff, slice_max);
    }
    if (count > 0) report.mean_diff = sum / count;
    return report;
}

}  // namespace tcproc
