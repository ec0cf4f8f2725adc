#include "tcproc/stochvol.hpp"

#include <algorithm>
#include <cmath>

namespace tcproc {

double MarketSpec::phi(double s, double y) const {
    return phi_C * (1.0 + std::sqrt(s * s + y * y));
}

MarketSpec MarketSpec::flat(double sigma, double gamma, double rho, double alpha, double C,
                            double p) {
    MarketSpec m;
    m.sigma_f = [sigma](double, double, double) { return sigma; };
    m.gamma_f = [gamma](double, double, double) { return gamma; };
    m.rho_f = [rho](double, double, double) { return rho; };
    m.alpha_f = [alpha](double, double, double) { return alpha; };
    m.rho_max = std::max(std::abs(rho), 0.1);
    m.phi_C = C;
    m.p = p;
    m.sigma_bound = std::max(sigma, gamma) * 2.0;
    m.name = "stochvol-flat";
    return m;
}

MarketSpec MarketSpec::hull_white(double rho, double alpha, double gamma, double C,
                                  double p) {
    MarketSpec m;
    m.sigma_f = [](double, double s, double y) {
        return std::clamp(s, 0.25, 4.0) * std::exp(0.5 * std::clamp(y, -2.0, 2.0));
    };
    m.gamma_f = [gamma](double, double, double) { return gamma; };
    m.rho_f = [rho](double, double, double) { return rho; };
    m.alpha_f = [alpha](double, double, double) { return alpha; };
    m.rho_max = std::max(std::abs(rho), 0.1);
    m.phi_C = C;
    m.p = p;
    m.sigma_bound = 4.0 * std::exp(1.0) + gamma;
    m.name = "stochvol-hull-white";
    return m;
}

DiffusionSpec build_joint_diffusion(const MarketSpec& mkt, const GridSpec* sample_grid) {
    if (mkt.n != 1)
        throw UnsupportedVariantError("build_joint_diffusion: desk scale is n = 1");
    DiffusionSpec d;
    d.dim = 2;
    d.name = mkt.name;
    d.sigma_bound = mkt.sigma_bound;
    auto sf = mkt.sigma_f;
    auto gf = mkt.gamma_f;
    auto rf = mkt.rho_f;
    d.sigma = [sf, gf, rf](double t, const Vec& x) {
        double sg = sf(t, x(0), x(1));
        double gm = gf(t, x(0), x(1));
        double rho = rf(t, x(0), x(1));
        Mat m(2, 2);
        m << sg * std::sqrt(1.0 - rho * rho), sg * rho, 0.0, gm;
        return m;
    };
    auto af = mkt.alpha_f;
    d.base_drift = [af](double t, const Vec& x) {
        Vec b(2);
        b << 0.0, af(t, x(0), x(1));
        return b;
    };
    if (sample_grid) {
        for (int i = 0; i <= sample_grid->nt; ++i) {
            double t = sample_grid->time(i);
            for (int j = 0; j < sample_grid->num_nodes(); ++j) {
                Vec x = sample_grid->node(j);
                double rho = mkt.rho_f(t, x(0), x(1));
                if (std::abs(rho) > mkt.rho_max || std::abs(rho) >= 1.0)
                    throw EllipticityError("stochvol: |rho| exceeds rho_max at a node");
                Mat a = eval_a(d, t, x);
                Eigen::SelfAdjointEigenSolver<Mat> es(a);
                if (es.eigenvalues().minCoeff() <= 0.0)
                    throw EllipticityError("stochvol: a not positive definite at a node");
            }
        }
    }
    return d;
}

ControlSetSpec martingale_control_set(const MarketSpec& mkt) {
    auto rf = mkt.rho_f;
    double C = mkt.phi_C;
    return ControlSetSpec::linear_constraint(
        mkt.n, [rf](double t, const Vec& x) { return rf(t, x(0), x(1)); },
        [C](double, const Vec& x) { return std::sqrt(C * (1.0 + x.norm())); });
}

std::vector<Vec> selector_path(const MarketSpec& mkt,
                               const std::vector<std::array<double, 3>>& path,
                               const Vec& lambda0, const std::array<double, 3>& base) {
    double rho0 = mkt.rho_f(base[0], base[1], base[2]);
    double root0 = std::sqrt(1.0 - rho0 * rho0);
    ControlSetSpec Lambda = martingale_control_set(mkt);
    Vec xb(2);
    xb << base[1], base[2];
    if (!Lambda.contains(base[0], xb, lambda0, 1e-8))
        throw OffDomainError("selector_path: lambda0 outside Lambda at the base point");
    double nu = lambda0(1);

    std::vector<Vec> out;
    out.reserve(path.size());
    for (const auto& tsy : path) {
        double rho_n = mkt.rho_f(tsy[0], tsy[1], tsy[2]);
        Vec lam(2);
        lam(1) = nu * std::sqrt(1.0 - rho_n * rho_n) / root0;
        lam(0) = -nu * rho_n / root0;
        out.push_back(lam);
    }
    return out;
}

PenaltySpec stochvol_penalty(const MarketSpec& mkt) {
    // sup over Lambda^phi of g is Phi^{p/2}/p with Phi = C(1+||x||)
    double Cg = std::pow(2.0 * mkt.phi_C, mkt.p / 2.0) / mkt.p;
    int m = static_cast<int>(std::ceil(mkt.p / 2.0));
    return PenaltySpec::power(mkt.p, Cg, m);
}

PriceQuote price_bid_ask(const MarketSpec& mkt, const PayoffSpec& payoff,
                         const GridSpec& grid, const Vec& start, int control_resolution) {
    DiffusionSpec diff = build_joint_diffusion(mkt);
    ControlSetSpec Lambda = martingale_control_set(mkt);
    PenaltySpec g = stochvol_penalty(mkt);

    MarketSpec wide = mkt;
    wide.phi_C = mkt.phi_C * mkt.surrep_C_mult;
    ControlSetSpec Lambda_wide = martingale_control_set(wide);

    int res = control_resolution > 0 ? control_resolution : grid.control_resolution;
    ValueField ask_field = backward_induction(diff, Lambda, g, payoff, grid,
                                              TransitionScheme::LocalQuadrature, res);
    PayoffSpec neg = PayoffSpec::negate(payoff, grid);
    ValueField bid_field = backward_induction(diff, Lambda, g, neg, grid,
                                              TransitionScheme::LocalQuadrature, res);
    ValueField surrep_field =
        backward_induction(diff, Lambda_wide, PenaltySpec::zero(), payoff, grid,
                           TransitionScheme::LocalQuadrature, res);

    PriceQuote quote;
    quote.ask = grid.interpolate(ask_field.values[0], start);
    quote.bid = -grid.interpolate(bid_field.values[0], start);
    quote.surrep = grid.interpolate(surrep_field.values[0], start);

    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < grid.nt; ++i) {
        double t = grid.time(i);
        for (int j = 0; j < grid.num_nodes(); ++j) {
            Vec x = grid.node(j);
            double drift = (diff.sigma(t, x) * ask_field.argmax[i].col(j)).norm();
            sum += drift;
            quote.argmax_drift_max = std::max(quote.argmax_drift_max, drift);
            ++count;
        }
    }
    if (count > 0) quote.argmax_drift_mean = sum / count;
    return quote;
}

}  // namespace tcproc
