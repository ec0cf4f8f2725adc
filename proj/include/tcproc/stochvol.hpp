#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tcproc/conjugate.hpp"
#include "tcproc/procedure.hpp"

namespace tcproc {

/// Stochastic-volatility market: price S driven by sigma(t,s,y), volatility
/// factor Y with drift alpha and vol-of-vol gamma, correlation rho in (-1,1).
/// Desk scale is n = 1 (two-dimensional joint state).
struct MarketSpec {
    int n = 1;
    std::function<double(double, double, double)> sigma_f;
    std::function<double(double, double, double)> gamma_f;
    std::function<double(double, double, double)> rho_f;
    std::function<double(double, double, double)> alpha_f;
    double rho_max = 0.99;
    double phi_C = 1.0;  // truncation: ||(alpha,nu)||^2 <= Phi(s,y) = C (1 + ||(s,y)||)
    double p = 2.0;      // power-penalty exponent
    double sigma_bound = 2.0;
    double surrep_C_mult = 4.0;  // widened truncation for the zero-penalty run
    std::string name = "stochvol";

    double phi(double s, double y) const;

    static MarketSpec flat(double sigma, double gamma, double rho, double alpha, double C,
                           double p);
    // Hull-White-type preset: sigma(t,s,y) = clip(s) exp(y/2), fields clipped at
    // configured caps to keep them bounded.
    static MarketSpec hull_white(double rho, double alpha, double gamma, double C, double p);
};

/// 2n-dimensional joint diffusion with Sigma Sigma^* equal to the block matrix
/// [[sigma^2, rho sigma gamma], [rho sigma gamma, gamma^2]]; the uncontrolled
/// Y-drift enters as a base drift.  Ellipticity is verified at the sample grid
/// nodes when a grid is supplied.
DiffusionSpec build_joint_diffusion(const MarketSpec& mkt, const GridSpec* sample_grid = nullptr);

/// Martingale-constraint control set Lambda^phi: the n-dimensional subspace
/// alpha sqrt(1-rho^2) + nu rho = 0 truncated to ||lambda||^2 <= Phi(s,y).
ControlSetSpec martingale_control_set(const MarketSpec& mkt);

/// Explicit continuity selector along a (t,s,y) path: nu_n = nu sqrt(1-rho_n^2)/sqrt(1-rho^2),
/// alpha_n = -nu rho_n / sqrt(1-rho^2); norm-preserving and constraint-exact.
std::vector<Vec> selector_path(const MarketSpec& mkt,
                               const std::vector<std::array<double, 3>>& path,
                               const Vec& lambda0, const std::array<double, 3>& base);

struct PriceQuote {
    double ask = 0.0;
    double bid = 0.0;
    double surrep = 0.0;
    double argmax_drift_mean = 0.0;
    double argmax_drift_max = 0.0;
};

/// Ask = Pi(xi), bid = -Pi(-xi) with the power penalty on Lambda^phi; the
/// surreplication price is the zero-penalty supremum over the widened set.
PriceQuote price_bid_ask(const MarketSpec& mkt, const PayoffSpec& payoff,
                         const GridSpec& grid, const Vec& start,
                         int control_resolution = -1);

/// Power penalty with the growth certificate implied by the truncation.
PenaltySpec stochvol_penalty(const MarketSpec& mkt);

}  // namespace tcproc
