#pragma once

#include <functional>
#include <vector>

#include "tcproc/conjugate.hpp"
#include "tcproc/procedure.hpp"

namespace tcproc {

/// Nonlinear generator evaluator f(t,x,z) consumed by the PDE solver; the
/// solver never sees the penalty g directly.
using ConjugateEvaluator = std::function<ConjugateResult(double t, const Vec& x, const Vec& z)>;

enum class PdeScheme { ExplicitUpwind, SemiImplicitSplit };

struct PdeField {
    GridSpec grid;
    std::vector<Vec> values;
    PdeScheme scheme = PdeScheme::ExplicitUpwind;
    double residual_max = 0.0;
    double residual_mean = 0.0;
};

/// Backward time-stepping for -d_u v - 1/2 Tr(a D^2 v) - b0.Dv - f(u,x,sigma^* Dv) = 0,
/// v(t,.) = h.  Explicit scheme checks the CFL bound and the monotonicity of all
/// stencil weights up front; the semi-implicit variant treats diffusion implicitly
/// (one-dimensional grids only) and the nonlinearity explicitly.
PdeField solve_semilinear(const DiffusionSpec& diff, const ConjugateEvaluator& f,
                          const PayoffSpec& h, const GridSpec& grid, PdeScheme scheme);

/// Same recursion as the procedure module's backward induction with f realized
/// through the shared transition stencil on an identical control lattice; used to
/// check that the two routes coincide exactly.
PdeField solve_equivalence_mode(const DiffusionSpec& diff, const ControlSetSpec& Lambda,
                                const PenaltySpec& g, const PayoffSpec& h,
                                const GridSpec& grid, int control_resolution = -1);

struct ResidualReport {
    double max_abs = 0.0;
    double mean_abs = 0.0;
    double min_signed = 0.0;
    double max_signed = 0.0;
    int nodes_checked = 0;
};

/// Discrete operator residual at interior nodes of the inner half-box, for either
/// route's field.
ResidualReport residual_check(const GridSpec& grid, const std::vector<Vec>& values,
                              const DiffusionSpec& diff, const ConjugateEvaluator& f);

struct DivergenceReport {
    double max_diff = 0.0;
    double mean_diff = 0.0;
    std::vector<double> per_slice_max;
};

DivergenceReport compare_fields(const ValueField& a, const PdeField& b);

}  // namespace tcproc
