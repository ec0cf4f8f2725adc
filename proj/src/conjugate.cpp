#include "tcproc/conjugate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tcproc {

namespace {

double objective(const PenaltySpec& g, const ControlSetSpec& Lambda, double t, const Vec& x,
                 const Vec& z, const Vec& lambda) {
    double gv = eval_g(g, Lambda, t, x, lambda, 1e-9);
    if (std::isinf(gv)) return -std::numeric_limits<double>::infinity();
    return z.dot(lambda) - gv;
}

}  // namespace

ConjugateResult fenchel_numeric(const PenaltySpec& g, const ControlSetSpec& Lambda, double t,
                                const Vec& x, const Vec& z, int resolution, int depth) {
    if (resolution < 2) throw DomainError("fenchel_numeric: resolution must be >= 2");
    if (depth < 0) throw DomainError("fenchel_numeric: depth must be >= 0");

    std::vector<Vec> lattice = Lambda.sample(t, x, resolution);
    if (lattice.empty()) throw EmptyControlSetError("fenchel_numeric: empty lattice");

    ConjugateResult best;
    best.value = -std::numeric_limits<double>::infinity();
    // smallest lattice index wins ties (strict improvement only)
    for (const Vec& lam : lattice) {
        double v = objective(g, Lambda, t, x, z, lam);
        if (v > best.value) {
            best.value = v;
            best.argmax = lam;
        }
    }

    double scale = std::max(Lambda.norm_bound(t, x), 1e-8);
    double h = 2.0 * scale / resolution;
    int d = Lambda.dim;
    for (int it = 0; it < depth; ++it) {
        h *= 0.5;
        int corners = 1;
        for (int k = 0; k < d; ++k) corners *= 3;
        for (int c = 0; c < corners; ++c) {
            Vec cand = best.argmax;
            int cc = c;
            for (int k = 0; k < d; ++k) {
                cand(k) += h * ((cc % 3) - 1);
                cc /= 3;
            }
            cand = Lambda.project(t, x, cand);
            double v = objective(g, Lambda, t, x, z, cand);
            if (v > best.value) {
                best.value = v;
                best.argmax = cand;
            }
        }
        best.refinement_depth = it + 1;
    }
    best.attained = Lambda.contains(t, x, best.argmax, 1e-8);
    return best;
}

namespace {

double two_branch(double p, double Phi, double psi) {
    double q = p / (p - 1.0);
    if (psi <= std::pow(Phi, (p - 1.0) / 2.0)) return std::pow(psi, q) / q;
    return psi * std::sqrt(Phi) - std::pow(Phi, p / 2.0) / p;
}

}  // namespace

double fenchel_closed_stochvol(double p, double Phi, double rho, const Vec& z2n) {
    if (std::abs(rho) >= 1.0)
        throw DomainError("fenchel_closed_stochvol: |rho| must be < 1");
    if (!(p > 1.0)) throw DomainError("fenchel_closed_stochvol: p must be > 1");
    if (!(Phi > 0.0)) throw DomainError("fenchel_closed_stochvol: Phi must be > 0");
    int n = static_cast<int>(z2n.size()) / 2;
    Vec z = z2n.head(n);
    Vec zp = z2n.tail(n);
    double psi = (z - (rho / std::sqrt(1.0 - rho * rho)) * zp).norm();
    return two_branch(p, Phi, psi);
}

double fenchel_stochvol_effective(double p, double Phi, double rho, const Vec& z2n) {
    if (std::abs(rho) >= 1.0)
        throw DomainError("fenchel_stochvol_effective: |rho| must be < 1");
    int n = static_cast<int>(z2n.size()) / 2;
    Vec z = z2n.head(n);
    Vec zp = z2n.tail(n);
    double psi = (std::sqrt(1.0 - rho * rho) * zp - rho * z).norm();
    return two_branch(p, Phi, psi);
}

GrowthReport check_Hg(const PenaltySpec& g, const ControlSetSpec& Lambda,
                      const std::vector<std::pair<double, Vec>>& nodes, int resolution,
                      bool throw_on_violation) {
    if (nodes.empty()) throw DomainError("check_Hg: empty sample set");
    GrowthReport report;
    for (const auto& [t, x] : nodes) {
        double bound = g.growth_C * (1.0 + std::pow(x.norm(), g.growth_m));
        for (const Vec& lam : Lambda.sample(t, x, resolution)) {
            double gv = std::abs(g.eval_on_domain(t, x, lam));
            double ratio = bound > 0.0 ? gv / bound : (gv > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            if (ratio > report.max_ratio) {
                report.max_ratio = ratio;
                report.worst_t = t;
                report.worst_x = x;
            }
        }
    }
    report.pass = report.max_ratio <= 1.0 + 1e-12;
    if (!report.pass && throw_on_violation) {
        std::ostringstream os;
        os << "growth certificate violated: ratio " << report.max_ratio << " at t="
           << report.worst_t;
        throw GrowthViolationError(os.str());
    }
    return report;
}

}  // namespace tcproc
