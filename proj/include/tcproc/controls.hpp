#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcproc/core_model.hpp"

namespace tcproc {

/// Parametric selector (u,x) -> Lambda(u,x).
struct Selector {
    enum class Kind { Constant, ClippedAffine, Table };

    Kind kind = Kind::Constant;
    Vec value;  // Constant
    Mat A;      // ClippedAffine: project(A x + b)
    Vec b;
    // Table: per-node control values on `table_grid` state nodes (control dim x nodes);
    // looked up at the nearest node and projected onto Lambda.
    std::optional<GridSpec> table_grid;
    Mat table;

    Vec eval(const ControlSetSpec& Lambda, double u, const Vec& x) const;

    static Selector constant(const Vec& lambda);
    static Selector clipped_affine(const Mat& A, const Vec& b);
    static Selector table_lookup(const GridSpec& grid, const Mat& values);
};

/// Membership condition on the state recorded at a subdivision time.
struct CellCondition {
    double time = 0.0;
    Vec lo, hi;
    bool inside = true;
};

struct ControlCell {
    std::vector<CellCondition> conditions;
    Selector selector;
};

/// Piecewise control: a finite subdivision r = s_0 < ... < s_n = t with, on each
/// interval, a finite partition of state space into cells (conditions evaluated
/// on the path state at the recorded subdivision times) and one selector per cell.
struct MarkovControl {
    std::vector<double> subdivision;
    std::vector<std::vector<ControlCell>> intervals;  // one cell list per interval
    std::string id = "control";

    int interval_index(double u) const;  // u in (s_i, s_{i+1}] convention, left closed at r
    // States at subdivision times s_0..s_i are supplied by the caller (the path
    // history needed to resolve cell membership).
    int cell_index(int interval, const std::vector<Vec>& states_at_subdivision) const;
    Vec eval(const ControlSetSpec& Lambda, double u,
             const std::vector<Vec>& states_at_subdivision, const Vec& x_now) const;

    void validate(const ControlSetSpec& Lambda, const GridSpec& grid,
                  int samples_per_axis = 5) const;
};

/// Single-interval, single-cell control from one selector.
MarkovControl constant_control(const Selector& sel, double r, double t, const Vec& box_lo,
                               const Vec& box_hi);

/// The base-measure control mu = 0 on [r,t], id "zero".
MarkovControl zero_control(int control_dim, double r, double t, const Vec& box_lo,
                           const Vec& box_hi);

/// Equal to ctrl_a before s; after s, ctrl_a on {X_s in region}, ctrl_b elsewhere.
MarkovControl bifurcate(const MarkovControl& ctrl_a, const MarkovControl& ctrl_b, double s,
                        const Vec& region_lo, const Vec& region_hi);

/// ctrl_b on [r,s], ctrl_a on (s,t].
MarkovControl compose(const MarkovControl& ctrl_a, const MarkovControl& ctrl_b, double s);

/// Discrete feedback class the backward induction optimizes over: one choice from
/// the control lattice per (time node, state node).  Never materialized; exposes
/// per-node choices and the total count in log10.
struct FeedbackEnumeration {
    const ControlSetSpec* Lambda = nullptr;
    GridSpec grid;

    std::vector<Vec> choices(int time_index, int node_index) const;
    double log10_count() const;
};

FeedbackEnumeration enumerate_feedback_controls(const ControlSetSpec& Lambda,
                                                const GridSpec& grid);

}  // namespace tcproc
