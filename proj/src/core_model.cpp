#include "tcproc/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tcproc {

namespace {

bool all_finite(const Mat& m) { return m.allFinite(); }

void check_finite(const Mat& m, const char* what) {
    if (!all_finite(m)) throw NonFiniteError(std::string(what) + ": non-finite entry");
}

}  // namespace

Vec DiffusionSpec::drift0(double t, const Vec& x) const {
    if (!base_drift) return Vec::Zero(dim);
    return base_drift(t, x);
}

DiffusionSpec DiffusionSpec::constant(const Mat& s) {
    DiffusionSpec d;
    d.dim = static_cast<int>(s.rows());
    Mat copy = s;
    d.sigma = [copy](double, const Vec&) { return copy; };
    d.sigma_bound = s.operatorNorm();
    d.name = "constant";
    return d;
}

DiffusionSpec DiffusionSpec::diagonal_affine(const Vec& offset, const Vec& slope, double lo,
                                             double hi) {
    DiffusionSpec d;
    d.dim = static_cast<int>(offset.size());
    d.sigma = [offset, slope, lo, hi](double, const Vec& x) {
        Mat s = Mat::Zero(offset.size(), offset.size());
        for (int i = 0; i < offset.size(); ++i)
            s(i, i) = std::clamp(offset(i) + slope(i) * x(i), lo, hi);
        return s;
    };
    d.sigma_bound = std::max(std::abs(lo), std::abs(hi));
    d.name = "diagonal_affine";
    return d;
}

DiffusionSpec DiffusionSpec::table_interpolated(const Vec& knots, const Mat& values) {
    DiffusionSpec d;
    d.dim = static_cast<int>(values.rows());
    d.sigma = [knots, values](double, const Vec& x) {
        Mat s = Mat::Zero(values.rows(), values.rows());
        for (int i = 0; i < values.rows(); ++i) {
            double xi = x(i);
            int k = 0;
            while (k + 2 < knots.size() && knots(k + 1) < xi) ++k;
            double w = (xi - knots(k)) / (knots(k + 1) - knots(k));
            w = std::clamp(w, 0.0, 1.0);
            s(i, i) = (1.0 - w) * values(i, k) + w * values(i, k + 1);
        }
        return s;
    };
    double vmax = values.cwiseAbs().maxCoeff();
    d.sigma_bound = vmax;
    d.name = "table";
    return d;
}

Mat eval_a(const DiffusionSpec& spec, double t, const Vec& x) {
    Mat s = spec.sigma(t, x);
    check_finite(s, "sigma");
    Mat a = s * s.transpose();
    return 0.5 * (a + a.transpose());
}

// ---------------------------------------------------------------------------
// ControlSetSpec

namespace {

// Orthonormal basis direction of the constraint subspace for component i:
// (alpha_i, nu_i) proportional to (-rho, sqrt(1-rho^2)).
Vec subspace_direction(int n, int i, double rho) {
    Vec u = Vec::Zero(2 * n);
    double root = std::sqrt(1.0 - rho * rho);
    u(i) = -rho;
    u(n + i) = root;
    return u;
}

void append_unique(std::vector<Vec>& out, const Vec& v, double tol = 1e-12) {
    for (const Vec& w : out)
        if ((w - v).lpNorm<Eigen::Infinity>() <= tol) return;
    out.push_back(v);
}

}  // namespace

bool ControlSetSpec::contains(double t, const Vec& x, const Vec& lambda, double tol) const {
    switch (kind) {
        case Kind::Point:
            return lambda.lpNorm<Eigen::Infinity>() <= tol;
        case Kind::Ball:
            return lambda.norm() <= radius + tol;
        case Kind::Box:
            return (lambda.array() >= lo.array() - tol).all() &&
                   (lambda.array() <= hi.array() + tol).all();
        case Kind::LinearConstraint: {
            int n = dim / 2;
            double r = rho(t, x);
            double root = std::sqrt(1.0 - r * r);
            for (int i = 0; i < n; ++i)
                if (std::abs(lambda(i) * root + lambda(n + i) * r) > tol) return false;
            return lambda.norm() <= norm_cap(t, x) + tol;
        }
        case Kind::GrowthTruncated:
            return inner->contains(t, x, lambda, tol) &&
                   lambda.norm() <= growth_C * (1.0 + x.norm()) + tol;
    }
    throw UnsupportedVariantError("control set: unknown variant");
}

Vec ControlSetSpec::project(double t, const Vec& x, const Vec& lambda) const {
    switch (kind) {
        case Kind::Point:
            return Vec::Zero(dim);
        case Kind::Ball: {
            double norm = lambda.norm();
            if (norm <= radius || norm == 0.0) return lambda;
            return lambda * (radius / norm);
        }
        case Kind::Box:
            return lambda.cwiseMax(lo).cwiseMin(hi);
        case Kind::LinearConstraint: {
            int n = dim / 2;
            double r = rho(t, x);
            Vec w(n);
            for (int i = 0; i < n; ++i) w(i) = subspace_direction(n, i, r).dot(lambda);
            double cap = norm_cap(t, x);
            double wn = w.norm();
            if (wn > cap && wn > 0.0) w *= cap / wn;
            Vec out = Vec::Zero(dim);
            for (int i = 0; i < n; ++i) out += w(i) * subspace_direction(n, i, r);
            return out;
        }
        case Kind::GrowthTruncated: {
            Vec v = inner->project(t, x, lambda);
            double cap = growth_C * (1.0 + x.norm());
            double norm = v.norm();
            if (norm > cap && norm > 0.0) v *= cap / norm;
            return v;
        }
    }
    throw UnsupportedVariantError("control set: unknown variant");
}

std::vector<Vec> ControlSetSpec::sample(double t, const Vec& x, int resolution) const {
    if (resolution < 1) throw DomainError("control_set_sample: resolution must be >= 1");
    std::vector<Vec> out;
    switch (kind) {
        case Kind::Point:
            out.push_back(Vec::Zero(dim));
            return out;
        case Kind::Ball:
        case Kind::Box: {
            Vec l = kind == Kind::Ball ? Vec::Constant(dim, -radius) : lo;
            Vec u = kind == Kind::Ball ? Vec::Constant(dim, radius) : hi;
            // product lattice of resolution+1 points per axis
            int per_axis = resolution + 1;
            std::vector<int> idx(dim, 0);
            bool done = false;
            while (!done) {
                Vec lam(dim);
                for (int k = 0; k < dim; ++k)
                    lam(k) = l(k) + (u(k) - l(k)) * idx[k] / static_cast<double>(resolution);
                if (kind != Kind::Ball || lam.norm() <= radius + 1e-12)
                    append_unique(out, lam);
                int k = 0;
                for (; k < dim; ++k) {
                    if (++idx[k] < per_axis) break;
                    idx[k] = 0;
                }
                done = (k == dim);
            }
            // axis extreme points and the origin
            for (int k = 0; k < dim; ++k) {
                Vec e = Vec::Zero(dim);
                e(k) = l(k);
                append_unique(out, e);
                e(k) = u(k);
                append_unique(out, e);
            }
            append_unique(out, Vec::Zero(dim));
            return out;
        }
        case Kind::LinearConstraint: {
            int n = dim / 2;
            double r = rho(t, x);
            double cap = norm_cap(t, x);
            std::vector<Vec> coeffs;
            // lattice over subspace coordinates w in [-cap, cap]^n, ||w|| <= cap
            int per_axis = resolution + 1;
            std::vector<int> idx(n, 0);
            bool done = false;
            while (!done) {
                Vec w(n);
                for (int k = 0; k < n; ++k)
                    w(k) = -cap + 2.0 * cap * idx[k] / static_cast<double>(resolution);
                if (w.norm() <= cap + 1e-12) coeffs.push_back(w);
                int k = 0;
                for (; k < n; ++k) {
                    if (++idx[k] < per_axis) break;
                    idx[k] = 0;
                }
                done = (k == n);
            }
            coeffs.push_back(Vec::Zero(n));
            for (const Vec& w : coeffs) {
                Vec lam = Vec::Zero(dim);
                for (int i = 0; i < n; ++i) lam += w(i) * subspace_direction(n, i, r);
                append_unique(out, lam);
            }
            return out;
        }
        case Kind::GrowthTruncated: {
            double cap = growth_C * (1.0 + x.norm());
            for (const Vec& lam : inner->sample(t, x, resolution)) {
                Vec v = lam;
                double norm = v.norm();
                if (norm > cap && norm > 0.0) v *= cap / norm;
                append_unique(out, v);
            }
            return out;
        }
    }
    throw UnsupportedVariantError("control_set_sample: unknown variant");
}

double ControlSetSpec::norm_bound(double t, const Vec& x) const {
    switch (kind) {
        case Kind::Point:
            return 0.0;
        case Kind::Ball:
            return radius;
        case Kind::Box:
            return std::max(lo.norm(), hi.norm());
        case Kind::LinearConstraint:
            return norm_cap(t, x);
        case Kind::GrowthTruncated:
            return std::min(inner->norm_bound(t, x), growth_C * (1.0 + x.norm()));
    }
    throw UnsupportedVariantError("control set: unknown variant");
}

ControlSetSpec ControlSetSpec::point(int dim) {
    ControlSetSpec s;
    s.kind = Kind::Point;
    s.dim = dim;
    return s;
}

ControlSetSpec ControlSetSpec::ball(int dim, double K) {
    ControlSetSpec s;
    s.kind = Kind::Ball;
    s.dim = dim;
    s.radius = K;
    return s;
}

ControlSetSpec ControlSetSpec::box(const Vec& lo, const Vec& hi) {
    if ((lo.array() > 0).any() || (hi.array() < 0).any())
        throw DomainError("box control set must contain 0");
    ControlSetSpec s;
    s.kind = Kind::Box;
    s.dim = static_cast<int>(lo.size());
    s.lo = lo;
    s.hi = hi;
    return s;
}

ControlSetSpec ControlSetSpec::linear_constraint(
    int n, std::function<double(double, const Vec&)> rho,
    std::function<double(double, const Vec&)> cap) {
    ControlSetSpec s;
    s.kind = Kind::LinearConstraint;
    s.dim = 2 * n;
    s.rho = std::move(rho);
    s.norm_cap = std::move(cap);
    return s;
}

ControlSetSpec ControlSetSpec::growth_truncated(ControlSetSpec inner, double C) {
    ControlSetSpec s;
    s.kind = Kind::GrowthTruncated;
    s.dim = inner.dim;
    s.growth_C = C;
    s.inner = std::make_shared<ControlSetSpec>(std::move(inner));
    return s;
}

// ---------------------------------------------------------------------------
// PenaltySpec

double PenaltySpec::eval_on_domain(double t, const Vec& x, const Vec& lambda) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Constant:
            return c;
        case Kind::Power:
            return std::pow(lambda.norm(), p) / p;
        case Kind::QuadraticForm:
            return 0.5 * lambda.dot(quadratic * lambda);
        case Kind::Custom:
            return custom(t, x, lambda);
    }
    throw UnsupportedVariantError("penalty: unknown variant");
}

double PenaltySpec::value_at_zero(double t, const Vec& x, int control_dim) const {
    return eval_on_domain(t, x, Vec::Zero(control_dim));
}

bool PenaltySpec::nonnegative_normalized() const {
    switch (kind) {
        case Kind::Zero:
        case Kind::Power:
            return true;
        case Kind::Constant:
            return c == 0.0;
        case Kind::QuadraticForm:
            return quadratic.isApprox(quadratic.transpose()) &&
                   Eigen::SelfAdjointEigenSolver<Mat>(quadratic).eigenvalues().minCoeff() >=
                       0.0;
        case Kind::Custom:
            return false;  // no certificate for custom integrands
    }
    return false;
}

PenaltySpec PenaltySpec::zero() { return PenaltySpec{}; }

PenaltySpec PenaltySpec::constant(double c) {
    PenaltySpec g;
    g.kind = Kind::Constant;
    g.c = c;
    g.growth_C = std::abs(c);
    g.growth_m = 0;
    return g;
}

PenaltySpec PenaltySpec::power(double p, double growth_C, int growth_m) {
    PenaltySpec g;
    g.kind = Kind::Power;
    g.p = p;
    g.growth_C = growth_C;
    g.growth_m = growth_m;
    return g;
}

PenaltySpec PenaltySpec::quadratic_form(const Mat& Q, double growth_C, int growth_m) {
    PenaltySpec g;
    g.kind = Kind::QuadraticForm;
    g.quadratic = Q;
    g.growth_C = growth_C;
    g.growth_m = growth_m;
    return g;
}

double eval_g(const PenaltySpec& g, const ControlSetSpec& Lambda, double t, const Vec& x,
              const Vec& lambda, double tol) {
    if (!Lambda.contains(t, x, lambda, tol))
        return std::numeric_limits<double>::infinity();
    return g.eval_on_domain(t, x, lambda);
}

// ---------------------------------------------------------------------------
// GridSpec

void GridSpec::validate() const {
    if (!(t0 < t1)) throw DomainError("grid: t0 < t1 required");
    if (nt < 1) throw DomainError("grid: nt >= 1 required");
    if (state_lo.size() != state_hi.size() ||
        static_cast<int>(nx.size()) != state_lo.size())
        throw DomainError("grid: dimension mismatch");
    for (int k = 0; k < dim(); ++k) {
        if (!(state_lo(k) < state_hi(k)))
            throw DomainError("grid: state_lo < state_hi required");
        if (nx[k] < 3) throw DomainError("grid: nx >= 3 per axis required");
    }
}

int GridSpec::time_index(double t, double tol) const {
    double u = (t - t0) / dt();
    int i = static_cast<int>(std::lround(u));
    if (i < 0 || i > nt || std::abs(u - i) > tol)
        throw GridMismatchError("time not on grid");
    return i;
}

double GridSpec::dx(int axis) const {
    return (state_hi(axis) - state_lo(axis)) / (nx[axis] - 1);
}

int GridSpec::num_nodes() const {
    int n = 1;
    for (int k : nx) n *= k;
    return n;
}

std::vector<int> GridSpec::unflatten(int flat) const {
    std::vector<int> idx(dim());
    for (int k = 0; k < dim(); ++k) {
        idx[k] = flat % nx[k];
        flat /= nx[k];
    }
    return idx;
}

int GridSpec::flatten(const std::vector<int>& idx) const {
    int flat = 0;
    for (int k = dim() - 1; k >= 0; --k) flat = flat * nx[k] + idx[k];
    return flat;
}

Vec GridSpec::node(int flat) const {
    std::vector<int> idx = unflatten(flat);
    Vec x(dim());
    for (int k = 0; k < dim(); ++k) x(k) = state_lo(k) + idx[k] * dx(k);
    return x;
}

double GridSpec::interpolate(const Vec& values, const Vec& point) const {
    constexpr int kMaxDim = 8;
    int d = dim();
    if (d > kMaxDim)
        throw UnsupportedVariantError("grid_interpolate: dimension above 8");
    int base[kMaxDim];
    int stride[kMaxDim];
    double w[kMaxDim];
    int s = 1;
    for (int k = 0; k < d; ++k) {
        double u = (point(k) - state_lo(k)) / dx(k);
        int i0 = static_cast<int>(std::floor(u));
        i0 = std::clamp(i0, 0, nx[k] - 2);
        base[k] = i0;
        w[k] = u - i0;  // outside [0,1] at the boundary: linear extrapolation
        stride[k] = s;
        s *= nx[k];
    }
    double acc = 0.0;
    int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        double weight = 1.0;
        int flat = 0;
        for (int k = 0; k < d; ++k) {
            bool high = (c >> k) & 1;
            flat += (base[k] + (high ? 1 : 0)) * stride[k];
            weight *= high ? w[k] : (1.0 - w[k]);
        }
        acc += weight * values(flat);
    }
    return acc;
}

bool GridSpec::in_inner_half_box(const Vec& x) const {
    for (int k = 0; k < dim(); ++k) {
        double mid = 0.5 * (state_lo(k) + state_hi(k));
        double half = 0.25 * (state_hi(k) - state_lo(k));
        if (x(k) < mid - half - 1e-12 || x(k) > mid + half + 1e-12) return false;
    }
    return true;
}

bool GridSpec::interior(const std::vector<int>& idx) const {
    for (int k = 0; k < dim(); ++k)
        if (idx[k] == 0 || idx[k] == nx[k] - 1) return false;
    return true;
}

GridSpec GridSpec::make(double t0, double t1, int nt, const Vec& lo, const Vec& hi, int nx,
                        int control_resolution) {
    GridSpec g;
    g.t0 = t0;
    g.t1 = t1;
    g.nt = nt;
    g.state_lo = lo;
    g.state_hi = hi;
    g.nx.assign(lo.size(), nx);
    g.control_resolution = control_resolution;
    g.validate();
    return g;
}

}  // namespace tcproc
