#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

#include "matherkit/lax_oleinik.hpp"
#include "matherkit/parallel.hpp"

namespace matherkit {

/// Base or phase-space sample on the grid. The velocity is present for
/// phase-space samples; base samples are their projection.
struct SamplePoint {
    int t_idx = 0;
    int cell = 0;
    bool has_velocity = false;
    Vec v = {0.0, 0.0};
};

inline bool same_base(const SamplePoint& a, const SamplePoint& b) {
    return a.t_idx == b.t_idx && a.cell == b.cell;
}

/// Lift of a sample into the product space (t, q mod 1[, q2], v[, v2]).
inline std::vector<double> lift_coords(const Grid& grid, const SamplePoint& s) {
    std::vector<double> x;
    x.push_back(wrap_unit(s.t_idx * grid.dt()));
    Vec q = grid.cell_center(s.cell);
    for (int i = 0; i < grid.dim; ++i) x.push_back(q[i]);
    for (int i = 0; i < grid.dim; ++i) x.push_back(s.v[i]);
    return x;
}

/// Wrap flags for the product metric: time and positions wrap, velocities do not.
inline std::vector<bool> lift_wrap_flags(const Grid& grid) {
    std::vector<bool> w;
    w.push_back(true);
    for (int i = 0; i < grid.dim; ++i) w.push_back(true);
    for (int i = 0; i < grid.dim; ++i) w.push_back(false);
    return w;
}

/// Sampled Peierls barrier h[i][j] ~ h_L(x_i, x_j), computed as the minimum
/// of the alpha-corrected action over a window of integer horizons.
struct BarrierTable {
    Grid grid;
    double alpha = 0.0;
    int T_min = 1;
    int T_max = 8;
    std::vector<SamplePoint> sources;
    std::vector<SamplePoint> targets;
    std::vector<std::vector<double>> h;
    bool square() const {
        if (sources.size() != targets.size()) return false;
        for (std::size_t i = 0; i < sources.size(); ++i)
            if (!same_base(sources[i], targets[i])) return false;
        return true;
    }
    // Full-grid window minima per source, recorded on demand; these realize
    // the weak KAM solutions x -> h(x_i, x).
    bool has_full_fields = false;
    std::vector<ValueFunction> full_fields;
};

/// DP front from each source over T_max periods. At every integer-period hit
/// of a target fiber the alpha-corrected running action is recorded; the
/// barrier entry is the minimum over the tail window [T_min, T_max], a
/// computable stand-in for the liminf. Throws WindowTooShort when the
/// minimum still drops across the last quarter of the window.
inline BarrierTable compute_barrier(const CostModel& model, double alpha,
                                    const std::vector<SamplePoint>& sources,
                                    const std::vector<SamplePoint>& targets,
                                    int T_min, int T_max, bool record_full = false,
                                    double tol_tail = 1e-3) {
    if (!(T_max > T_min && T_min >= 1))
        throw Error("compute_barrier: need T_max > T_min >= 1");
    const Grid& grid = model.grid();
    const int cells = grid.n_cells();
    const int n_t = grid.n_t;

    BarrierTable table;
    table.grid = grid;
    table.alpha = alpha;
    table.T_min = T_min;
    table.T_max = T_max;
    table.sources = sources;
    table.targets = targets;
    table.h.assign(sources.size(), std::vector<double>(targets.size(), kInf));
    table.has_full_fields = record_full;
    if (record_full) table.full_fields.assign(sources.size(), ValueFunction{});

    // worst tail drop per source row, checked after the parallel phase
    std::vector<std::pair<int, double>> tail_drop(sources.size(), {-1, 0.0});

    parallel_for(sources.size(), [&](std::size_t i) {
        const SamplePoint& src = sources[i];
        // hits[j][T] = alpha-corrected action of the T-period hit of target j
        std::vector<std::vector<double>> hits(targets.size(),
                                              std::vector<double>(T_max + 1, kInf));
        ValueFunction* field = nullptr;
        if (record_full) {
            field = &table.full_fields[i];
            field->grid = grid;
            field->slices.assign(n_t, std::vector<double>(cells, kInf));
        }

        int max_offset = 0;
        for (const auto& tgt : targets)
            max_offset = std::max(max_offset, ((tgt.t_idx - src.t_idx) % n_t + n_t) % n_t);
        const int total_steps = T_max * n_t + max_offset;

        std::vector<double> front(cells, kInf), next;
        front[src.cell] = 0.0;
        for (int s = 1; s <= total_steps; ++s) {
            model.sweep(front, (src.t_idx + s - 1) % n_t, next);
            front.swap(next);
            double corrected = s * grid.dt() * alpha;
            int slice = (src.t_idx + s) % n_t;
            for (std::size_t j = 0; j < targets.size(); ++j) {
                int offset = ((targets[j].t_idx - src.t_idx) % n_t + n_t) % n_t;
                if ((s - offset) % n_t != 0) continue;
                int T = (s - offset) / n_t;
                if (T >= 1 && T <= T_max)
                    hits[j][T] = front[targets[j].cell] + corrected;
            }
            if (field && s >= T_min * n_t) {
                auto& u = field->slices[slice];
                for (int c = 0; c < cells; ++c)
                    u[c] = std::min(u[c], front[c] + corrected);
            }
        }

        int T_q = T_min + (3 * (T_max - T_min)) / 4;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            double early = kInf, full = kInf;
            for (int T = T_min; T <= T_max; ++T) {
                full = std::min(full, hits[j][T]);
                if (T <= T_q) early = std::min(early, hits[j][T]);
            }
            table.h[i][j] = full;
            double drop = early - full;
            if (std::isfinite(drop) && drop > tail_drop[i].second)
                tail_drop[i] = {int(j), drop};
        }
    });

    for (std::size_t i = 0; i < sources.size(); ++i)
        if (tail_drop[i].first >= 0 && tail_drop[i].second > tol_tail)
            throw WindowTooShort(int(i), tail_drop[i].first, tail_drop[i].second);
    return table;
}

/// The function x -> h(x_src, x) as a ValueFunction. Requires the table to
/// have been built with full-field recording, which covers the whole grid.
inline ValueFunction weak_kam_from_barrier(const BarrierTable& table, int source_idx) {
    if (!table.has_full_fields)
        throw CoverageGap("table built without full-grid fields");
    if (source_idx < 0 || source_idx >= int(table.full_fields.size()))
        throw Error("weak_kam_from_barrier: source index out of range");
    return table.full_fields[source_idx];
}

/// Aubry samples, pseudo-metric, static classes and the quotient metric.
struct AubryDecomposition {
    std::vector<int> aubry;                   // indices into the table samples
    std::vector<std::vector<double>> d;       // pseudo-metric on aubry
    std::vector<std::vector<int>> classes;    // partition of positions in `aubry`
    std::vector<std::vector<double>> quotient; // min-link distance between classes
    double tol_aubry = 0.0;
    double tol_class = 0.0;
};

/// Diagonal thresholding of a square table, symmetrized distance and
/// single-linkage classes at tol_class.
inline AubryDecomposition aubry_decomposition(const BarrierTable& table,
                                              double tol_aubry, double tol_class) {
    if (!table.square()) throw Error("aubry_decomposition: table is not square");
    const int n = int(table.sources.size());
    AubryDecomposition dec;
    dec.tol_aubry = tol_aubry;
    dec.tol_class = tol_class;

    double min_diag = kInf;
    for (int i = 0; i < n; ++i) {
        min_diag = std::min(min_diag, table.h[i][i]);
        if (table.h[i][i] <= tol_aubry) dec.aubry.push_back(i);
    }
    if (dec.aubry.empty()) throw EmptyAubry(min_diag, tol_aubry);

    const int m = int(dec.aubry.size());
    dec.d.assign(m, std::vector<double>(m, 0.0));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            dec.d[a][b] = table.h[dec.aubry[a]][dec.aubry[b]] +
                          table.h[dec.aubry[b]][dec.aubry[a]];

    // single-linkage components of the thresholded graph
    std::vector<int> comp(m, -1);
    int n_comp = 0;
    for (int a = 0; a < m; ++a) {
        if (comp[a] >= 0) continue;
        std::vector<int> stack = {a};
        comp[a] = n_comp;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int y = 0; y < m; ++y)
                if (comp[y] < 0 && dec.d[x][y] <= tol_class) {
                    comp[y] = n_comp;
                    stack.push_back(y);
                }
        }
        ++n_comp;
    }
    dec.classes.assign(n_comp, {});
    for (int a = 0; a < m; ++a) dec.classes[comp[a]].push_back(a);

    dec.quotient.assign(n_comp, std::vector<double>(n_comp, 0.0));
    for (int c1 = 0; c1 < n_comp; ++c1)
        for (int c2 = 0; c2 < n_comp; ++c2) {
            if (c1 == c2) continue;
            double best = kInf;
            for (int a : dec.classes[c1])
                for (int b : dec.classes[c2]) best = std::min(best, dec.d[a][b]);
            dec.quotient[c1][c2] = best;
        }
    return dec;
}

/// Calibrated invariant structure of one weak KAM solution: the graph
/// Gamma(L,u) over every base point, the forward calibrated step map, and
/// the filtered set playing the role of I~(L,u).
struct CalibratedSets {
    Grid grid;
    int n_cal = 2;
    double tol_cal = 1e-6;
    std::vector<std::vector<int>> forward;    // calibrated forward step per (t,cell)
    std::vector<std::vector<int>> backward;   // predecessor map of the solution
    std::vector<std::vector<double>> defect;  // accumulated forward defect, n_cal periods
    std::vector<std::vector<Vec>> velocity;   // arrival velocity per (t,cell)
    std::vector<SamplePoint> gamma;           // one lift per base point
    std::vector<SamplePoint> i_set;           // survivors of the calibration filter

    // filled by mane_set
    std::vector<SamplePoint> mane;
    std::vector<int> mane_contributor;
    std::vector<CalibratedSets> members;
    double mane_tail_forward = 0.0;
    double mane_tail_backward = 0.0;

    SamplePoint lifted(int t_idx, int cell) const {
        SamplePoint s;
        s.t_idx = t_idx;
        s.cell = cell;
        s.has_velocity = true;
        s.v = velocity[t_idx][cell];
        return s;
    }
};

/// Builds Gamma and the discrete surrogate of I~(L,u): a base point survives
/// when the forward walk along most-calibrated continuations keeps its
/// accumulated calibration defect below tol_cal for n_cal full periods.
/// Velocities come from predecessor displacements.
inline CalibratedSets calibrated_sets(const WeakKamResult& result, const CostModel& model,
                                      int n_cal, double tol_cal = 1e-4) {
    if (n_cal < 2) throw Error("calibrated_sets: need n_cal >= 2 periods");
    const Grid& grid = model.grid();
    const int cells = grid.n_cells();
    const int n_t = grid.n_t;

    CalibratedSets sets;
    sets.grid = grid;
    sets.n_cal = n_cal;
    sets.tol_cal = tol_cal;
    sets.backward = result.predecessor;
    sets.forward.assign(n_t, std::vector<int>(cells, 0));
    sets.velocity.assign(n_t, std::vector<Vec>(cells, Vec{0.0, 0.0}));

    // Moves ordered by displacement size. Exact ties in the forward argmin
    // are structural at discrete rest points (the neighbor value equals the
    // hop cost), and the genuine orbit is the one that moves least.
    std::vector<int> order(model.moves().size());
    for (std::size_t m = 0; m < order.size(); ++m) order[m] = int(m);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ma = model.moves()[a].step;
        const auto& mb = model.moves()[b].step;
        int na = ma[0] * ma[0] + ma[1] * ma[1], nb = mb[0] * mb[0] + mb[1] * mb[1];
        if (na != nb) return na < nb;
        return ma < mb;
    });

    // per-step forward calibration defect
    std::vector<std::vector<double>> step_defect(n_t, std::vector<double>(cells, 0.0));
    for (int t = 0; t < n_t; ++t) {
        int nxt = (t + 1) % n_t;
        parallel_for(std::size_t(cells), [&](std::size_t zc) {
            int z = int(zc);
            double best = kInf;
            int best_dst = -1;
            for (int m : order) {
                auto idx = grid.cell_index(z);
                idx[0] += model.moves()[m].step[0];
                idx[1] += model.moves()[m].step[1];
                int dst = grid.flat_index(idx);
                double cand = model.move_cost(t, m, z) + grid.dt() * result.alpha -
                              result.u.slices[nxt][dst];
                if (cand < best) {
                    best = cand;
                    best_dst = dst;
                }
            }
            sets.forward[t][z] = best_dst;
            step_defect[t][z] = result.u.slices[t][z] + best;
        });
    }

    // accumulate defects along the forward walk for n_cal periods
    std::vector<std::vector<double>> acc(n_t, std::vector<double>(cells, 0.0)), acc_next = acc;
    for (int k = 0; k < n_cal * n_t; ++k) {
        for (int t = 0; t < n_t; ++t) {
            int nxt = (t + 1) % n_t;
            for (int z = 0; z < cells; ++z)
                acc_next[t][z] = step_defect[t][z] + acc[nxt][sets.forward[t][z]];
        }
        acc.swap(acc_next);
    }
    sets.defect = acc;

    for (int t = 0; t < n_t; ++t) {
        int prv = (t - 1 + n_t) % n_t;
        for (int z = 0; z < cells; ++z) {
            int p = result.predecessor[t][z];
            Vec v = {0.0, 0.0};
            Vec from = grid.cell_center(p), to = grid.cell_center(z);
            for (int i = 0; i < grid.dim; ++i)
                v[i] = nearest_delta(from[i], to[i]) / grid.dt();
            (void)prv;
            sets.velocity[t][z] = v;
        }
    }

    for (int t = 0; t < n_t; ++t)
        for (int z = 0; z < cells; ++z) {
            sets.gamma.push_back(sets.lifted(t, z));
            if (acc[t][z] <= tol_cal) sets.i_set.push_back(sets.lifted(t, z));
        }
    return sets;
}

/// One-period walk along the calibrated forward map.
inline SamplePoint forward_period(const CalibratedSets& sets, const SamplePoint& s,
                                  int periods = 1) {
    int t = s.t_idx, cell = s.cell;
    for (int k = 0; k < periods * sets.grid.n_t; ++k) {
        cell = sets.forward[t][cell];
        t = (t + 1) % sets.grid.n_t;
    }
    return sets.lifted(t, cell);
}

/// One-period walk along the predecessor map.
inline SamplePoint backward_period(const CalibratedSets& sets, const SamplePoint& s,
                                   int periods = 1) {
    int t = s.t_idx, cell = s.cell;
    for (int k = 0; k < periods * sets.grid.n_t; ++k) {
        cell = sets.backward[t][cell];
        t = (t - 1 + sets.grid.n_t) % sets.grid.n_t;
    }
    return sets.lifted(t, cell);
}

inline double sample_distance(const Grid& grid, const SamplePoint& a, const SamplePoint& b) {
    return wrapped_dist(lift_coords(grid, a), lift_coords(grid, b), lift_wrap_flags(grid));
}

inline double distance_to_set(const Grid& grid, const SamplePoint& s,
                              const std::vector<SamplePoint>& set) {
    double best = kInf;
    for (const auto& t : set) best = std::min(best, sample_distance(grid, s, t));
    return best;
}

/// Samples of one time fiber together with their positions in the original
/// list (the Poincare section used by the chain machinery).
inline std::pair<std::vector<SamplePoint>, std::vector<std::size_t>>
fiber_section(const std::vector<SamplePoint>& samples, int t_idx) {
    std::pair<std::vector<SamplePoint>, std::vector<std::size_t>> out;
    for (std::size_t k = 0; k < samples.size(); ++k)
        if (samples[k].t_idx == t_idx) {
            out.first.push_back(samples[k]);
            out.second.push_back(k);
        }
    return out;
}

/// Union of the calibrated sets over a family of solutions; the discrete
/// Mane set. Forward and backward tails of every retained sample are walked
/// n_cal periods and their final distance to the Aubry samples is reported.
inline CalibratedSets mane_set(const CostModel& model,
                               const std::vector<WeakKamResult>& family, int n_cal,
                               double tol_cal,
                               const std::vector<SamplePoint>& aubry_samples) {
    if (family.empty()) throw Error("mane_set: empty solution family");
    std::vector<CalibratedSets> members;
    members.reserve(family.size());
    for (const auto& res : family)
        members.push_back(calibrated_sets(res, model, n_cal, tol_cal));

    CalibratedSets out = members[0];
    out.members = members;
    // Samples are deduplicated as phase points: same base cell with a
    // different (quantized) velocity is a different point of the Mane set.
    double cell_speed = model.grid().dq() / model.grid().dt();
    std::set<std::tuple<int, int, long, long>> seen;
    for (std::size_t m = 0; m < members.size(); ++m) {
        for (const auto& s : members[m].i_set) {
            long v0 = std::lround(s.v[0] / cell_speed);
            long v1 = std::lround(s.v[1] / cell_speed);
            if (!seen.insert({s.t_idx, s.cell, v0, v1}).second) continue;
            out.mane.push_back(s);
            out.mane_contributor.push_back(int(m));
        }
    }

    for (std::size_t i = 0; i < out.mane.size(); ++i) {
        const auto& member = out.members[out.mane_contributor[i]];
        SamplePoint fwd = forward_period(member, out.mane[i], n_cal);
        SamplePoint bwd = backward_period(member, out.mane[i], n_cal);
        if (!aubry_samples.empty()) {
            out.mane_tail_forward = std::max(
                out.mane_tail_forward, distance_to_set(model.grid(), fwd, aubry_samples));
            out.mane_tail_backward = std::max(
                out.mane_tail_backward, distance_to_set(model.grid(), bwd, aubry_samples));
        }
    }
    return out;
}

} // namespace matherkit
