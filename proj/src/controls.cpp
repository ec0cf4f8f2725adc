#include "tcproc/controls.hpp"

#include <algorithm>
#include <cmath>

namespace tcproc {

Vec Selector::eval(const ControlSetSpec& Lambda, double u, const Vec& x) const {
    switch (kind) {
        case Kind::Constant:
            return value;
        case Kind::ClippedAffine:
            return Lambda.project(u, x, A * x + b);
        case Kind::Table: {
            // nearest node lookup, then projection
            const GridSpec& g = *table_grid;
            std::vector<int> idx(g.dim());
            for (int k = 0; k < g.dim(); ++k) {
                double pos = (x(k) - g.state_lo(k)) / g.dx(k);
                idx[k] = std::clamp(static_cast<int>(std::lround(pos)), 0, g.nx[k] - 1);
            }
            return Lambda.project(u, x, table.col(g.flatten(idx)));
        }
    }
    throw UnsupportedVariantError("selector: unknown kind");
}

Selector Selector::constant(const Vec& lambda) {
    Selector s;
    s.kind = Kind::Constant;
    s.value = lambda;
    return s;
}

Selector Selector::clipped_affine(const Mat& A, const Vec& b) {
    Selector s;
    s.kind = Kind::ClippedAffine;
    s.A = A;
    s.b = b;
    return s;
}

Selector Selector::table_lookup(const GridSpec& grid, const Mat& values) {
    Selector s;
    s.kind = Kind::Table;
    s.table_grid = grid;
    s.table = values;
    return s;
}

namespace {

bool in_box(const Vec& x, const Vec& lo, const Vec& hi) {
    return (x.array() >= lo.array() - 1e-12).all() &&
           (x.array() <= hi.array() + 1e-12).all();
}

bool condition_holds(const CellCondition& c, const std::vector<double>& subdivision,
                     const std::vector<Vec>& states) {
    // locate the recorded state at the condition's key time
    int idx = -1;
    for (size_t i = 0; i < subdivision.size() && i < states.size() + 1; ++i)
        if (std::abs(subdivision[i] - c.time) < 1e-12) idx = static_cast<int>(i);
    if (idx < 0 || idx >= static_cast<int>(states.size()))
        throw GridMismatchError("control condition: no recorded state at key time");
    bool inside = in_box(states[idx], c.lo, c.hi);
    return c.inside ? inside : !inside;
}

}  // namespace

int MarkovControl::interval_index(double u) const {
    int n = static_cast<int>(subdivision.size()) - 1;
    for (int i = 0; i < n; ++i)
        if (u < subdivision[i + 1] - 1e-12) return i;
    return n - 1;
}

int MarkovControl::cell_index(int interval, const std::vector<Vec>& states) const {
    const auto& cells = intervals[interval];
    for (size_t j = 0; j < cells.size(); ++j) {
        bool all = true;
        for (const CellCondition& c : cells[j].conditions)
            if (!condition_holds(c, subdivision, states)) {
                all = false;
                break;
            }
        if (all) return static_cast<int>(j);
    }
    throw OffDomainError("markov control: no cell matches the path history");
}

Vec MarkovControl::eval(const ControlSetSpec& Lambda, double u,
                        const std::vector<Vec>& states, const Vec& x_now) const {
    int i = interval_index(u);
    int j = cell_index(i, states);
    return intervals[i][j].selector.eval(Lambda, u, x_now);
}

void MarkovControl::validate(const ControlSetSpec& Lambda, const GridSpec& grid,
                             int samples_per_axis) const {
    if (subdivision.size() < 2) throw DomainError("markov control: empty subdivision");
    for (size_t i = 0; i + 1 < subdivision.size(); ++i)
        if (!(subdivision[i] < subdivision[i + 1]))
            throw DomainError("markov control: subdivision not increasing");
    if (intervals.size() != subdivision.size() - 1)
        throw DomainError("markov control: interval/cell count mismatch");

    // Partition check by sampling: every sampled history must match exactly one cell.
    int d = grid.dim();
    std::vector<Vec> probes;
    std::vector<int> idx(d, 0);
    bool done = false;
    while (!done) {
        Vec x(d);
        for (int k = 0; k < d; ++k)
            x(k) = grid.state_lo(k) + (grid.state_hi(k) - grid.state_lo(k)) * idx[k] /
                                          static_cast<double>(samples_per_axis - 1);
        probes.push_back(x);
        int k = 0;
        for (; k < d; ++k) {
            if (++idx[k] < samples_per_axis) break;
            idx[k] = 0;
        }
        done = (k == d);
    }
    for (size_t i = 0; i < intervals.size(); ++i) {
        for (const Vec& x : probes) {
            std::vector<Vec> states(subdivision.size(), x);
            int matches = 0;
            for (const auto& cell : intervals[i]) {
                bool all = true;
                for (const CellCondition& c : cell.conditions)
                    if (!condition_holds(c, subdivision, states)) {
                        all = false;
                        break;
                    }
                if (all) ++matches;
            }
            if (matches != 1)
                throw DomainError("markov control: cells do not partition the state box");
            // selector membership
            double u = subdivision[i];
            Vec lam = eval(Lambda, u + 1e-9, states, x);
            if (!Lambda.contains(u, x, lam, 1e-8))
                throw OffDomainError("markov control: selector value outside Lambda");
        }
    }
}

MarkovControl constant_control(const Selector& sel, double r, double t, const Vec& box_lo,
                               const Vec& box_hi) {
    MarkovControl c;
    c.subdivision = {r, t};
    ControlCell cell;
    cell.conditions.push_back(CellCondition{r, box_lo, box_hi, true});
    cell.selector = sel;
    c.intervals.push_back({cell});
    c.id = "constant";
    return c;
}

MarkovControl zero_control(int control_dim, double r, double t, const Vec& box_lo,
                           const Vec& box_hi) {
    MarkovControl c =
        constant_control(Selector::constant(Vec::Zero(control_dim)), r, t, box_lo, box_hi);
    c.id = "zero";
    return c;
}

namespace {

// Insert time s into the subdivision, duplicating the enclosing interval's cells.
MarkovControl refined_at(const MarkovControl& ctrl, double s) {
    for (double u : ctrl.subdivision)
        if (std::abs(u - s) < 1e-12) return ctrl;
    MarkovControl out = ctrl;
    for (size_t i = 0; i + 1 < ctrl.subdivision.size(); ++i) {
        if (ctrl.subdivision[i] < s && s < ctrl.subdivision[i + 1]) {
            out.subdivision.insert(out.subdivision.begin() + i + 1, s);
            out.intervals.insert(out.intervals.begin() + i, ctrl.intervals[i]);
            return out;
        }
    }
    throw GridMismatchError("refine: time outside control span");
}

bool same_prefix(const MarkovControl& a, const MarkovControl& b, double s) {
    size_t i = 0, j = 0;
    while (i + 1 < a.subdivision.size() && a.subdivision[i + 1] <= s + 1e-12 &&
           j + 1 < b.subdivision.size() && b.subdivision[j + 1] <= s + 1e-12) {
        if (std::abs(a.subdivision[i] - b.subdivision[j]) > 1e-12) return false;
        if (a.intervals[i].size() != b.intervals[j].size()) return false;
        for (size_t k = 0; k < a.intervals[i].size(); ++k) {
            const Selector& sa = a.intervals[i][k].selector;
            const Selector& sb = b.intervals[j][k].selector;
            if (sa.kind != sb.kind) return false;
            if (sa.kind == Selector::Kind::Constant && !sa.value.isApprox(sb.value))
                return false;
        }
        ++i;
        ++j;
    }
    return true;
}

}  // namespace

MarkovControl bifurcate(const MarkovControl& ctrl_a, const MarkovControl& ctrl_b, double s,
                        const Vec& region_lo, const Vec& region_hi) {
    MarkovControl a = refined_at(ctrl_a, s);
    MarkovControl b = refined_at(ctrl_b, s);
    if (!same_prefix(a, b, s))
        throw IncompatiblePrefixError("bifurcate: controls differ before the split time");

    MarkovControl out;
    out.id = a.id + "|bif|" + b.id;
    // prefix from a
    size_t ia = 0;
    while (a.subdivision[ia + 1] <= s + 1e-12) {
        out.subdivision.push_back(a.subdivision[ia]);
        out.intervals.push_back(a.intervals[ia]);
        ++ia;
    }
    out.subdivision.push_back(s);

    // merged tail: union of both subdivisions after s
    std::vector<double> tail;
    for (double u : a.subdivision)
        if (u > s + 1e-12) tail.push_back(u);
    for (double u : b.subdivision) {
        if (u > s + 1e-12 &&
            std::none_of(tail.begin(), tail.end(),
                         [u](double v) { return std::abs(u - v) < 1e-12; }))
            tail.push_back(u);
    }
    std::sort(tail.begin(), tail.end());

    for (double u_end : tail) {
        double u_start = out.subdivision.back();
        double mid = 0.5 * (u_start + u_end);
        std::vector<ControlCell> cells;
        const auto& cells_a = a.intervals[a.interval_index(mid)];
        const auto& cells_b = b.intervals[b.interval_index(mid)];
        for (const ControlCell& cell : cells_a) {
            ControlCell c = cell;
            c.conditions.push_back(CellCondition{s, region_lo, region_hi, true});
            cells.push_back(c);
        }
        for (const ControlCell& cell : cells_b) {
            ControlCell c = cell;
            c.conditions.push_back(CellCondition{s, region_lo, region_hi, false});
            cells.push_back(c);
        }
        out.intervals.push_back(cells);
        out.subdivision.push_back(u_end);
    }
    return out;
}

MarkovControl compose(const MarkovControl& ctrl_a, const MarkovControl& ctrl_b, double s) {
    MarkovControl a = refined_at(ctrl_a, s);
    MarkovControl b = refined_at(ctrl_b, s);
    MarkovControl out;
    out.id = b.id + "|then|" + a.id;
    for (size_t i = 0; i + 1 < b.subdivision.size(); ++i) {
        if (b.subdivision[i + 1] <= s + 1e-12) {
            out.subdivision.push_back(b.subdivision[i]);
            out.intervals.push_back(b.intervals[i]);
        }
    }
    out.subdivision.push_back(s);
    for (size_t i = 0; i + 1 < a.subdivision.size(); ++i) {
        if (a.subdivision[i] >= s - 1e-12) {
            out.intervals.push_back(a.intervals[i]);
            out.subdivision.push_back(a.subdivision[i + 1]);
        }
    }
    if (out.subdivision.size() < 2) {
        // degenerate split at an endpoint: fall back to the surviving control
        return s <= ctrl_a.subdivision.front() + 1e-12 ? ctrl_a : ctrl_b;
    }
    // drop a zero-length leading or trailing interval created by s at an endpoint
    if (std::abs(out.subdivision[0] - out.subdivision[1]) < 1e-12) {
        out.subdivision.erase(out.subdivision.begin());
        out.intervals.erase(out.intervals.begin());
    }
    return out;
}

std::vector<Vec> FeedbackEnumeration::choices(int time_index, int node_index) const {
    return Lambda->sample(grid.time(time_index), grid.node(node_index),
                          grid.control_resolution);
}

double FeedbackEnumeration::log10_count() const {
    double log_count = 0.0;
    for (int i = 0; i < grid.nt; ++i)
        for (int j = 0; j < grid.num_nodes(); ++j)
            log_count += std::log10(static_cast<double>(choices(i, j).size()));
    return log_count;
}

FeedbackEnumeration enumerate_feedback_controls(const ControlSetSpec& Lambda,
                                                const GridSpec& grid) {
    grid.validate();
    FeedbackEnumeration e;
    e.Lambda = &Lambda;
    e.grid = grid;
    return e;
}

}  // namespace tcproc
