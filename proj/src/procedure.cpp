#include "tcproc/procedure.hpp"

#include <algorithm>
#include <cmath>

namespace tcproc {

// ---------------------------------------------------------------------------
// PayoffSpec

double PayoffSpec::eval(const Vec& x) const {
    double v = 0.0;
    switch (kind) {
        case Kind::Call:
            v = std::max(x(coordinate) - strike, 0.0);
            break;
        case Kind::Put:
            v = std::max(strike - x(coordinate), 0.0);
            break;
        case Kind::Power: {
            double e = exponent;
            double base = x(coordinate);
            // integer exponents keep the sign convention of monomials
            v = std::pow(base, e);
            break;
        }
        case Kind::Constant:
            v = c;
            break;
        case Kind::Table:
            v = table_grid->interpolate(table_values, x);
            break;
    }
    return std::min(v, cap);
}

PayoffSpec PayoffSpec::call(double strike, int coordinate, double cap) {
    PayoffSpec h;
    h.kind = Kind::Call;
    h.strike = strike;
    h.coordinate = coordinate;
    h.cap = cap;
    h.bounded_below = 0.0;
    return h;
}

PayoffSpec PayoffSpec::put(double strike, int coordinate) {
    PayoffSpec h;
    h.kind = Kind::Put;
    h.strike = strike;
    h.coordinate = coordinate;
    h.bounded_below = 0.0;
    return h;
}

PayoffSpec PayoffSpec::power(double exponent, int coordinate, double cap) {
    PayoffSpec h;
    h.kind = Kind::Power;
    h.exponent = exponent;
    h.coordinate = coordinate;
    h.cap = cap;
    return h;
}

PayoffSpec PayoffSpec::constant(double c) {
    PayoffSpec h;
    h.kind = Kind::Constant;
    h.c = c;
    h.bounded_below = c;
    return h;
}

PayoffSpec PayoffSpec::table(const GridSpec& grid, const Vec& values) {
    PayoffSpec h;
    h.kind = Kind::Table;
    h.table_grid = grid;
    h.table_values = values;
    h.bounded_below = values.minCoeff();
    return h;
}

PayoffSpec PayoffSpec::negate(const PayoffSpec& h, const GridSpec& grid) {
    Vec values(grid.num_nodes());
    for (int j = 0; j < grid.num_nodes(); ++j) values(j) = -h.eval(grid.node(j));
    return table(grid, values);
}

// ---------------------------------------------------------------------------
// Transition stencils

TransitionStencil transition_points(const DiffusionSpec& diff, double t, const Vec& x,
                                    const Vec& lambda, double dt, const GridSpec* grid) {
    const int n = diff.dim;
    Mat s = diff.sigma(t, x);
    if (!s.allFinite()) throw NonFiniteError("transition_points: non-finite sigma");
    Mat a = s * s.transpose();
    Vec mean = x + (diff.drift0(t, x) + s * lambda) * dt;

    TransitionStencil st;
    bool diagonal = true;
    for (int i = 0; i < n && diagonal; ++i)
        for (int j = 0; j < n && diagonal; ++j)
            if (i != j && std::abs(a(i, j)) > 1e-13 * (1.0 + a.trace())) diagonal = false;

    if (diagonal && grid && grid->dim() == n) {
        // per-axis trinomial on whole cells: points mean +- k dx e_i with weight
        // w_i = a_ii dt / (2 k^2 dx^2) <= 1/(2n) by the choice of k
        double center_weight = 1.0;
        for (int i = 0; i < n; ++i) {
            if (a(i, i) <= 0.0) continue;
            double dx = grid->dx(i);
            int k = std::max(
                1, static_cast<int>(std::ceil(std::sqrt(n * a(i, i) * dt) / dx - 1e-12)));
            double w = a(i, i) * dt / (2.0 * k * k * dx * dx);
            st.points.push_back(mean + k * dx * Vec::Unit(n, i));
            st.points.push_back(mean - k * dx * Vec::Unit(n, i));
            st.weights.push_back(w);
            st.weights.push_back(w);
            center_weight -= 2.0 * w;
        }
        st.points.push_back(mean);
        st.weights.push_back(center_weight);
        return st;
    }

    Eigen::LLT<Mat> llt(0.5 * (a + a.transpose()));
    if (llt.info() != Eigen::Success)
        throw EllipticityError("transition_points: a = sigma sigma^* not positive definite");
    Mat L = llt.matrixL();
    st.points.reserve(2 * n);
    st.weights.assign(2 * n, 1.0 / (2.0 * n));
    double scale = std::sqrt(static_cast<double>(n) * dt);
    for (int i = 0; i < n; ++i) {
        Vec col = L.col(i);
        st.points.push_back(mean + scale * col);
        st.points.push_back(mean - scale * col);
    }
    return st;
}

namespace {

// Evaluation points are clamped to the state box: the discrete chain is
// absorbed at the boundary, matching the path simulator, and every
// interpolation weight stays nonnegative (monotone step).
double expectation_local(const GridSpec& grid, const Vec& next_values,
                         const TransitionStencil& st) {
    double acc = 0.0;
    Vec p;
    for (size_t k = 0; k < st.points.size(); ++k) {
        p = st.points[k].cwiseMax(grid.state_lo).cwiseMin(grid.state_hi);
        acc += st.weights[k] * grid.interpolate(next_values, p);
    }
    return acc;
}

// Lattice trinomial step for one-dimensional grids.
double expectation_markov_chain(const GridSpec& grid, const Vec& next_values, int node,
                                double a, double b, double dt) {
    double dx = grid.dx(0);
    double p_diff = a * dt / (dx * dx);
    double p_drift = b * dt / dx;
    double p_up = 0.5 * (p_diff + p_drift);
    double p_dn = 0.5 * (p_diff - p_drift);
    double p_mid = 1.0 - p_diff;
    if (p_up < -1e-14 || p_dn < -1e-14 || p_mid < -1e-14)
        throw UnstableStepError("markov-chain weights negative; refine dt");
    int nx = grid.nx[0];
    auto value_at = [&](int j) {
        if (j < 0) return 2.0 * next_values(0) - next_values(1);
        if (j >= nx) return 2.0 * next_values(nx - 1) - next_values(nx - 2);
        return next_values(j);
    };
    return p_dn * value_at(node - 1) + p_mid * value_at(node) + p_up * value_at(node + 1);
}

}  // namespace

ValueField backward_induction(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                              const PenaltySpec& g, const PayoffSpec& h,
                              const GridSpec& grid, TransitionScheme scheme,
                              int control_resolution) {
    grid.validate();
    if (scheme == TransitionScheme::MarkovChain && grid.dim() != 1)
        throw UnsupportedVariantError("markov-chain transitions implemented for n = 1");
    int res = control_resolution > 0 ? control_resolution : grid.control_resolution;
    const int nodes = grid.num_nodes();
    const double dt = grid.dt();

    ValueField vf;
    vf.grid = grid;
    vf.terminal = h;
    vf.values.assign(grid.nt + 1, Vec::Zero(nodes));
    vf.argmax.assign(grid.nt, Mat::Zero(Lambda.dim, nodes));
    for (int j = 0; j < nodes; ++j) vf.values[grid.nt](j) = h.eval(grid.node(j));

    for (int i = grid.nt - 1; i >= 0; --i) {
        double t = grid.time(i);
        const Vec& next = vf.values[i + 1];
        Vec& cur = vf.values[i];
        for (int j = 0; j < nodes; ++j) {
            Vec x = grid.node(j);
            std::vector<Vec> lattice = Lambda.sample(t, x, res);
            if (lattice.empty())
                throw EmptyControlSetError("backward_induction: empty control lattice");
            double best = -std::numeric_limits<double>::infinity();
            int best_k = 0;
            // the diffusion displacements are control-independent; only the
            // mean shifts by sigma lambda dt across the lattice
            TransitionStencil st0;
            Mat s_mat;
            if (scheme == TransitionScheme::LocalQuadrature) {
                st0 = transition_points(diff, t, x, Vec::Zero(Lambda.dim), dt, &grid);
                s_mat = diff.sigma(t, x);
            }
            TransitionStencil st = st0;
            for (size_t k = 0; k < lattice.size(); ++k) {
                const Vec& lam = lattice[k];
                double expect;
                if (scheme == TransitionScheme::LocalQuadrature) {
                    Vec shift = s_mat * lam * dt;
                    for (size_t q = 0; q < st.points.size(); ++q)
                        st.points[q] = st0.points[q] + shift;
                    expect = expectation_local(grid, next, st);
                } else {
                    Mat s = diff.sigma(t, x);
                    double a = (s * s.transpose())(0, 0);
                    double b = diff.drift0(t, x)(0) + (s * lam)(0);
                    expect = expectation_markov_chain(grid, next, j, a, b, dt);
                }
                double val = expect - g.eval_on_domain(t, x, lam) * dt;
                if (val > best) {
                    best = val;
                    best_k = static_cast<int>(k);
                }
            }
            cur(j) = best;
            vf.argmax[i].col(j) = lattice[best_k];
        }
    }
    return vf;
}

McEstimate mc_value(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                    const MarkovControl& ctrl, const PenaltySpec& g, const PayoffSpec& h,
                    double r, const Vec& y, const GridSpec& grid, int n_paths,
                    std::uint64_t seed) {
    PathBatch batch = simulate_paths(diff, Lambda, ctrl, r, y, grid, n_paths, seed);
    Vec pen = accumulate_penalty(batch, g, Lambda, ctrl, grid.t0, grid.t1);
    double mean = 0.0, m2 = 0.0;
    for (int j = 0; j < n_paths; ++j) {
        double v = h.eval(batch.states.back().col(j)) - pen(j);
        double delta = v - mean;
        mean += delta / (j + 1);
        m2 += delta * (v - mean);
    }
    McEstimate est;
    est.value = mean;
    est.std_error = n_paths > 1 ? std::sqrt(m2 / (n_paths - 1) / n_paths) : 0.0;
    return est;
}

MarkovControl policy_control(const ValueField& vf, const ControlSetSpec& Lambda) {
    MarkovControl ctrl;
    ctrl.id = "policy";
    const GridSpec& grid = vf.grid;
    for (int i = 0; i <= grid.nt; ++i) ctrl.subdivision.push_back(grid.time(i));
    for (int i = 0; i < grid.nt; ++i) {
        ControlCell cell;
        cell.conditions.push_back(
            CellCondition{grid.time(i), grid.state_lo, grid.state_hi, true});
        cell.selector = Selector::table_lookup(grid, vf.argmax[i]);
        ctrl.intervals.push_back({cell});
    }
    (void)Lambda;
    return ctrl;
}

double check_time_consistency(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                              const PenaltySpec& g, const ValueField& vf, double s,
                              TransitionScheme scheme) {
    const GridSpec& grid = vf.grid;
    int is = grid.time_index(s);
    if (is == 0) return 0.0;
    GridSpec sub = grid;
    sub.t1 = s;
    sub.nt = is;
    PayoffSpec terminal = PayoffSpec::table(sub, vf.values[is]);
    ValueField rerun = backward_induction(diff, Lambda, g, terminal, sub, scheme,
                                          grid.control_resolution);
    return (rerun.values[0] - vf.values[0]).lpNorm<Eigen::Infinity>();
}

bool AxiomReport::pass(double tol) const {
    return monotonicity <= tol && translation_invariance <= tol && convexity <= tol &&
           normalization <= tol && positive_homogeneity <= tol;
}

AxiomReport check_axioms(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                         const PenaltySpec& g, const GridSpec& grid,
                         TransitionScheme scheme,
                         const std::vector<std::pair<PayoffSpec, PayoffSpec>>& payoff_pairs,
                         const std::vector<double>& thetas,
                         const std::vector<double>& constants,
                         bool throw_on_violation) {
    const int nodes = grid.num_nodes();
    auto solve = [&](const PayoffSpec& h) {
        return backward_induction(diff, Lambda, g, h, grid, scheme).values[0];
    };
    auto as_table = [&](const PayoffSpec& h) {
        Vec v(nodes);
        for (int j = 0; j < nodes; ++j) v(j) = h.eval(grid.node(j));
        return v;
    };

    AxiomReport report;
    for (const auto& [h1, h2] : payoff_pairs) {
        Vec t1 = as_table(h1), t2 = as_table(h2);
        Vec pi1 = solve(h1), pi2 = solve(h2);

        // monotonicity on the ordered pair (min, max)
        Vec lo = t1.cwiseMin(t2), hi = t1.cwiseMax(t2);
        Vec pi_lo = solve(PayoffSpec::table(grid, lo));
        Vec pi_hi = solve(PayoffSpec::table(grid, hi));
        report.monotonicity =
            std::max(report.monotonicity, (pi_lo - pi_hi).maxCoeff());

        for (double c : constants) {
            Vec pi_c = solve(PayoffSpec::table(grid, Vec(t1.array() + c)));
            report.translation_invariance = std::max(
                report.translation_invariance,
                (pi_c - pi1 - Vec::Constant(nodes, c)).lpNorm<Eigen::Infinity>());
        }
        for (double th : thetas) {
            Vec mix = th * t1 + (1.0 - th) * t2;
            Vec pi_mix = solve(PayoffSpec::table(grid, mix));
            report.convexity = std::max(
                report.convexity, (pi_mix - th * pi1 - (1.0 - th) * pi2).maxCoeff());
        }
        if (g.kind == PenaltySpec::Kind::Zero) {
            for (double th : thetas) {
                if (th <= 0.0) continue;
                Vec pi_scaled = solve(PayoffSpec::table(grid, Vec(th * t1.array())));
                report.positive_homogeneity =
                    std::max(report.positive_homogeneity,
                             (pi_scaled - th * pi1).lpNorm<Eigen::Infinity>());
            }
        }
    }
    if (g.nonnegative_normalized()) {
        Vec pi0 = solve(PayoffSpec::constant(0.0));
        report.normalization = pi0.lpNorm<Eigen::Infinity>();
    }
    if (throw_on_violation && !report.pass())
        throw AxiomViolationError("dynamic-procedure axiom violated");
    return report;
}

ModulusReport check_feller_modulus(const ValueField& vf) {
    const GridSpec& grid = vf.grid;
    const int nodes = grid.num_nodes();
    ModulusReport report;

    Vec h(nodes);
    for (int j = 0; j < nodes; ++j) h(j) = vf.terminal.eval(grid.node(j));

    std::vector<double> log_gap, log_dt;
    for (int i = 0; i <= grid.nt; ++i) {
        double slice_gap = 0.0;
        for (int j = 0; j < nodes; ++j) {
            Vec x = grid.node(j);
            if (!grid.in_inner_half_box(x)) continue;
            if (i < grid.nt) {
                report.max_time_increment =
                    std::max(report.max_time_increment,
                             std::abs(vf.values[i](j) - vf.values[i + 1](j)));
            }
            std::vector<int> idx = grid.unflatten(j);
            for (int k = 0; k < grid.dim(); ++k) {
                if (idx[k] + 1 >= grid.nx[k]) continue;
                std::vector<int> up = idx;
                ++up[k];
                double quot = std::abs(vf.values[i](grid.flatten(up)) - vf.values[i](j)) /
                              grid.dx(k);
                report.max_space_quotient = std::max(report.max_space_quotient, quot);
            }
            slice_gap = std::max(slice_gap, std::abs(vf.values[i](j) - h(j)));
        }
        double remaining = grid.t1 - grid.time(i);
        if (remaining > 1e-12 && slice_gap > 1e-14) {
            log_gap.push_back(std::log(slice_gap));
            log_dt.push_back(std::log(remaining));
        }
    }
    if (log_gap.size() >= 2) {
        // least squares fit log gap = log C + p log(t-s)
        double n = static_cast<double>(log_gap.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < log_gap.size(); ++i) {
            sx += log_dt[i];
            sy += log_gap[i];
            sxx += log_dt[i] * log_dt[i];
            sxy += log_dt[i] * log_gap[i];
        }
        double denom = n * sxx - sx * sx;
        if (std::abs(denom) > 1e-14) {
            report.rate_exponent = (n * sxy - sx * sy) / denom;
            report.sqrt_rate_constant = std::exp((sy - report.rate_exponent * sx) / n);
        }
    }
    return report;
}

}  // namespace tcproc
