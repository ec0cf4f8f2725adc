#pragma once

#include <vector>

#include "tcproc/core_model.hpp"

namespace tcproc {

/// Result of a numeric Fenchel conjugation f(t,x,z) = sup_{lambda in Lambda} (z.lambda - g).
struct ConjugateResult {
    double value = 0.0;
    Vec argmax;
    bool attained = false;
    int refinement_depth = 0;
};

/// Lattice maximization of z.lambda - g over Lambda(t,x), refined `depth` times
/// by shrinking a local grid around the incumbent (projected back onto Lambda).
/// The returned value is a guaranteed lower bound on the true conjugate and is
/// monotone nondecreasing in both resolution and depth.
ConjugateResult fenchel_numeric(const PenaltySpec& g, const ControlSetSpec& Lambda, double t,
                                const Vec& x, const Vec& z, int resolution, int depth);

/// Two-branch closed form for the stochastic-volatility conjugate, transcribed
/// literally: psi = ||z - rho/sqrt(1-rho^2) z'||, q = p/(p-1),
/// f = psi^q/q for psi <= Phi^{(p-1)/2}, else psi Phi^{1/2} - Phi^{p/2}/p.
/// z2n stacks (z, z').
double fenchel_closed_stochvol(double p, double Phi, double rho, const Vec& z2n);

/// Conjugate of the power penalty over the martingale-constraint set computed by
/// eliminating the constraint: effective slope ||sqrt(1-rho^2) z' - rho z||, same
/// two-branch profile.  Cross-checked against fenchel_numeric in the tests.
double fenchel_stochvol_effective(double p, double Phi, double rho, const Vec& z2n);

struct GrowthReport {
    double max_ratio = 0.0;  // max |g| / (C_g (1+||x||^m)) over the sample
    double worst_t = 0.0;
    Vec worst_x;
    bool pass = true;
};

/// Verifies the polynomial-growth certificate of g over sampled (t,x) nodes and
/// the control lattice.  Throws GrowthViolationError naming the worst node when
/// the certificate fails.
GrowthReport check_Hg(const PenaltySpec& g, const ControlSetSpec& Lambda,
                      const std::vector<std::pair<double, Vec>>& nodes, int resolution,
                      bool throw_on_violation = true);

}  // namespace tcproc
