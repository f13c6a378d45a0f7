#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "matherkit/grid.hpp"
#include "matherkit/lagrangian.hpp"
#include "matherkit/parallel.hpp"

namespace matherkit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Precomputed one-step transition costs dt*L(t, q_src, v) for every slice,
/// source cell and admissible displacement. Layout [slice][move][src] keeps
/// the inner DP loop contiguous.
class CostModel {
public:
    CostModel(const LagrangianSpec& spec, const Grid& grid)
        : spec_(spec), grid_(grid), moves_(build_transitions(grid)) {
        grid.validate();
        const int cells = grid.n_cells();
        const int nm = int(moves_.size());
        cost_.assign(std::size_t(grid.n_t) * nm * cells, 0.0);
        src_of_.assign(std::size_t(nm) * cells, 0);
        for (int m = 0; m < nm; ++m) {
            for (int dst = 0; dst < cells; ++dst) {
                auto idx = grid.cell_index(dst);
                idx[0] -= moves_[m].step[0];
                idx[1] -= moves_[m].step[1];
                src_of_[std::size_t(m) * cells + dst] = grid.flat_index(idx);
            }
        }
        for (int t = 0; t < grid.n_t; ++t) {
            double time = t * grid.dt();
            for (int m = 0; m < nm; ++m) {
                double* row = &cost_[slice_offset(t) + std::size_t(m) * cells];
                for (int src = 0; src < cells; ++src)
                    row[src] = grid.dt() * eval_lagrangian(spec, time, grid.cell_center(src),
                                                           moves_[m].velocity);
            }
        }
    }

    const Grid& grid() const { return grid_; }
    const LagrangianSpec& spec() const { return spec_; }
    const std::vector<Transition>& moves() const { return moves_; }

    double move_cost(int t_idx, int move, int src) const {
        return cost_[slice_offset(t_idx) + std::size_t(move) * grid_.n_cells() + src];
    }

    int source_cell(int move, int dst) const {
        return src_of_[std::size_t(move) * grid_.n_cells() + dst];
    }

    /// One backward Lax-Oleinik step: out[dst] = min over admissible sources
    /// of in[src] + dt*L(t_idx, src, v). Ties go to the lowest source index.
    void sweep(const std::vector<double>& in, int t_idx, std::vector<double>& out,
               std::vector<int>* pred = nullptr) const {
        const int cells = grid_.n_cells();
        out.assign(cells, kInf);
        if (pred) pred->assign(cells, -1);
        for (int m = 0; m < int(moves_.size()); ++m) {
            const double* c = &cost_[slice_offset(t_idx) + std::size_t(m) * cells];
            const int* srcs = &src_of_[std::size_t(m) * cells];
            for (int dst = 0; dst < cells; ++dst) {
                int src = srcs[dst];
                double cand = in[src] + c[src];
                if (cand < out[dst] ||
                    (cand == out[dst] && pred && src < (*pred)[dst])) {
                    out[dst] = cand;
                    if (pred) (*pred)[dst] = src;
                }
            }
        }
    }

private:
    std::size_t slice_offset(int t_idx) const {
        return std::size_t(t_idx) * moves_.size() * grid_.n_cells();
    }

    LagrangianSpec spec_;
    Grid grid_;
    std::vector<Transition> moves_;
    std::vector<double> cost_;
    std::vector<int> src_of_;
};

/// Discrete function on the space-time grid.
struct ValueFunction {
    Grid grid;
    std::vector<std::vector<double>> slices; // [n_t][n_cells]

    double at(int t_idx, int cell) const { return slices[t_idx][cell]; }

    /// Max slope between spatially neighboring cells.
    double lipschitz_seminorm() const {
        double m = 0.0;
        for (int t = 0; t < grid.n_t; ++t)
            for (int c = 0; c < grid.n_cells(); ++c) {
                auto idx = grid.cell_index(c);
                for (int i = 0; i < grid.dim; ++i) {
                    auto nb = idx;
                    nb[i] += 1;
                    double slope =
                        std::abs(slices[t][grid.flat_index(nb)] - slices[t][c]) / grid.dq();
                    m = std::max(m, slope);
                }
            }
        return m;
    }
};

struct SliceUpdate {
    std::vector<double> values;
    std::vector<int> pred;
};

/// Single Lax-Oleinik step as a standalone operation; the returned slice
/// lives at time index t_idx + 1.
inline SliceUpdate lax_oleinik_step(const CostModel& model,
                                    const std::vector<double>& u_slice, int t_idx) {
    SliceUpdate upd;
    model.sweep(u_slice, t_idx % model.grid().n_t, upd.values, &upd.pred);
    return upd;
}

inline SliceUpdate lax_oleinik_step(const LagrangianSpec& spec, const Grid& grid,
                                    const std::vector<double>& u_slice, int t_idx) {
    return lax_oleinik_step(CostModel(spec, grid), u_slice, t_idx);
}

/// Weak KAM solution of the discrete system: the value table, the critical
/// value estimate, the argmin predecessor map and the fixed-point residual.
struct WeakKamResult {
    ValueFunction u;
    double alpha = 0.0;
    std::vector<std::vector<int>> predecessor; // [n_t][cells] -> cell of slice t-1
    double residual = 0.0;
    int iters = 0;
};

namespace detail {

/// March one full period from the given initial slice with no alpha
/// correction; returns all slices (slice 0 of the next period in slot 0).
inline void period_march(const CostModel& model, std::vector<std::vector<double>>& slices,
                         std::vector<std::vector<int>>* preds = nullptr) {
    const int n_t = model.grid().n_t;
    std::vector<double> next;
    for (int t = 0; t < n_t; ++t) {
        int nxt = (t + 1) % n_t;
        model.sweep(slices[t], t, next, preds ? &(*preds)[nxt] : nullptr);
        slices[nxt] = next;
    }
}

} // namespace detail

/// Iterates the full-period operator from u = 0. The recentered iteration of
/// a finite min-plus system is eventually periodic: a stationary lock for
/// gradient-like systems, a cycle of some period p in rotation regimes. The
/// solver detects the lock over a window of past sweeps, reads the critical
/// value off the per-cycle drift, and takes the pointwise minimum of the
/// alpha-corrected cycle as the fixed point (the operator distributes over
/// min, so that minimum is exactly invariant). Throws NoConvergence with the
/// partial result when no lock appears within max_iters sweeps.
inline WeakKamResult solve_weak_kam(const CostModel& model, double tol_fix = 1e-12,
                                    int max_iters = 20000) {
    if (!(tol_fix > 0.0)) throw Error("solve_weak_kam: tol_fix must be positive");
    const Grid& grid = model.grid();
    const int cells = grid.n_cells();
    const int n_t = grid.n_t;
    constexpr int kMaxPeriod = 256;

    std::vector<std::vector<double>> slices(n_t, std::vector<double>(cells, 0.0));
    std::vector<std::vector<double>> history; // recentered slice-0 snapshots
    std::vector<double> shifts;               // cumulative recentring shifts
    history.reserve(kMaxPeriod + 1);
    history.push_back(slices[0]);
    shifts.push_back(0.0);

    double cumulative = 0.0;
    int found_period = 0;
    double match_defect = kInf;
    int iter = 0;
    for (iter = 1; iter <= max_iters && !found_period; ++iter) {
        detail::period_march(model, slices);
        double shift = slices[0][0];
        for (auto& s : slices)
            for (auto& x : s) x -= shift;
        cumulative += shift;

        int lags = std::min<int>(kMaxPeriod, int(history.size()));
        for (int p = 1; p <= lags && !found_period; ++p) {
            const auto& past = history[history.size() - p];
            double diff = 0.0;
            for (int c = 0; c < cells && diff <= tol_fix; ++c)
                diff = std::max(diff, std::abs(slices[0][c] - past[c]));
            if (diff <= tol_fix) {
                found_period = p;
                match_defect = diff;
            }
        }
        history.push_back(slices[0]);
        shifts.push_back(cumulative);
        if (int(history.size()) > kMaxPeriod + 1) {
            history.erase(history.begin());
            shifts.erase(shifts.begin());
        }
    }

    WeakKamResult res;
    res.u.grid = grid;
    res.iters = iter - 1;
    if (!found_period) {
        double best = kInf;
        for (int p = 1; p < int(history.size()); ++p) {
            const auto& past = history[history.size() - 1 - p];
            double diff = 0.0;
            for (int c = 0; c < cells; ++c)
                diff = std::max(diff, std::abs(slices[0][c] - past[c]));
            best = std::min(best, diff);
        }
        res.u.slices = slices;
        res.residual = best;
        res.alpha = shifts.size() > 1
                        ? -(shifts.back() - shifts[shifts.size() - 2])
                        : 0.0;
        throw NoConvergence<WeakKamResult>(max_iters, best, std::move(res));
    }

    const int p = found_period;
    double drift = cumulative - shifts[shifts.size() - 1 - p];
    res.alpha = -drift / p;

    // pointwise minimum of the alpha-corrected cycle: replay p sweeps
    std::vector<double> fixed = slices[0];
    std::vector<std::vector<double>> orbit = slices;
    double orbit_shift = 0.0;
    for (int j = 1; j < p; ++j) {
        detail::period_march(model, orbit);
        orbit_shift += res.alpha; // straighten the drift
        for (int c = 0; c < cells; ++c)
            fixed[c] = std::min(fixed[c], orbit[0][c] + orbit_shift);
    }

    // regenerate the full table and predecessors from the fixed slice
    res.u.slices.assign(n_t, std::vector<double>(cells, 0.0));
    res.u.slices[0] = fixed;
    res.predecessor.assign(n_t, std::vector<int>(cells, 0));
    std::vector<double> next;
    for (int t = 0; t < n_t; ++t) {
        int nxt = (t + 1) % n_t;
        model.sweep(res.u.slices[t], t, next, &res.predecessor[nxt]);
        for (int c = 0; c < cells; ++c) next[c] += grid.dt() * res.alpha;
        if (nxt != 0) res.u.slices[nxt] = next;
        else {
            // closing the period measures the true residual
            double osc_lo = kInf, osc_hi = -kInf;
            for (int c = 0; c < cells; ++c) {
                double d = next[c] - res.u.slices[0][c];
                osc_lo = std::min(osc_lo, d);
                osc_hi = std::max(osc_hi, d);
            }
            res.residual = std::max(osc_hi - osc_lo, match_defect);
        }
    }
    // pin the additive constant for reproducible exports
    double base = res.u.slices[0][0];
    for (auto& s : res.u.slices)
        for (auto& x : s) x -= base;
    return res;
}

inline WeakKamResult solve_weak_kam(const LagrangianSpec& spec, const Grid& grid,
                                    double tol_fix = 1e-12, int max_iters = 20000) {
    return solve_weak_kam(CostModel(spec, grid), tol_fix, max_iters);
}

/// Minimal discrete action over grid paths from (t_idx of start) to the cell
/// reached `steps` later. Returns infinity when no admissible path exists.
inline double discrete_action(const CostModel& model, int start_t, int start_cell,
                              int steps, int end_cell) {
    if (steps < 1) throw Error("discrete_action: horizon must be at least one step");
    const Grid& grid = model.grid();
    std::vector<double> front(grid.n_cells(), kInf), next;
    front[start_cell] = 0.0;
    for (int s = 0; s < steps; ++s) {
        model.sweep(front, (start_t + s) % grid.n_t, next);
        front.swap(next);
    }
    return front[end_cell];
}

struct DominationReport {
    double max_defect = -kInf;
    int witness_t = 0;
    int witness_src = 0;
    int witness_dst = 0;
};

/// Largest violation of u(next) - u(prev) <= dt*(L + alpha) over all
/// one-step transitions, with its witness.
inline DominationReport check_dominated(const ValueFunction& u, const CostModel& model,
                                        double alpha) {
    const Grid& grid = model.grid();
    const int cells = grid.n_cells();
    DominationReport rep;
    for (int t = 0; t < grid.n_t; ++t) {
        int nxt = (t + 1) % grid.n_t;
        for (int m = 0; m < int(model.moves().size()); ++m) {
            for (int dst = 0; dst < cells; ++dst) {
                int src = model.source_cell(m, dst);
                double defect = u.slices[nxt][dst] - u.slices[t][src] -
                                model.move_cost(t, m, src) - grid.dt() * alpha;
                if (defect > rep.max_defect) {
                    rep.max_defect = defect;
                    rep.witness_t = t;
                    rep.witness_src = src;
                    rep.witness_dst = dst;
                }
            }
        }
    }
    return rep;
}

/// Backward-calibrated discrete curve obtained by following the predecessor
/// map; samples run forward in time and end at `endpoint`.
struct DiscreteCurve {
    std::vector<PhasePoint> samples;
    double action = 0.0;             // accumulated dt*L along the hops
    double calibration_defect = 0.0; // u(end)-u(start) - sum dt*(L+alpha)
};

inline DiscreteCurve calibrated_curve(const WeakKamResult& result, const CostModel& model,
                                      int end_t, int end_cell, int n_periods) {
    if (n_periods < 1) throw Error("calibrated_curve: need at least one period");
    const Grid& grid = model.grid();
    const int steps = n_periods * grid.n_t;

    std::vector<int> cells(steps + 1);
    cells[steps] = end_cell;
    int t = end_t;
    for (int s = steps; s > 0; --s) {
        cells[s - 1] = result.predecessor[((t % grid.n_t) + grid.n_t) % grid.n_t][cells[s]];
        --t;
    }

    DiscreteCurve curve;
    curve.samples.resize(steps + 1);
    int t0 = end_t - steps;
    for (int s = 0; s <= steps; ++s) {
        PhasePoint p;
        int slice = (((t0 + s) % grid.n_t) + grid.n_t) % grid.n_t;
        p.t = wrap_unit(slice * grid.dt());
        p.q = grid.cell_center(cells[s]);
        curve.samples[s] = p;
    }
    // arrival velocities from the nearest-image hop; first sample reuses the
    // departure velocity so the curve has a velocity everywhere
    for (int s = 1; s <= steps; ++s) {
        Vec v = {0.0, 0.0};
        for (int i = 0; i < grid.dim; ++i)
            v[i] = nearest_delta(curve.samples[s - 1].q[i], curve.samples[s].q[i]) / grid.dt();
        curve.samples[s].v = v;
    }
    if (steps >= 1) curve.samples[0].v = curve.samples[1].v;

    for (int s = 0; s < steps; ++s) {
        int slice = (((t0 + s) % grid.n_t) + grid.n_t) % grid.n_t;
        double time = slice * grid.dt();
        curve.action += grid.dt() * eval_lagrangian(model.spec(), time,
                                                    curve.samples[s].q,
                                                    curve.samples[s + 1].v);
    }
    int slice_end = ((end_t % grid.n_t) + grid.n_t) % grid.n_t;
    int slice_start = ((t0 % grid.n_t) + grid.n_t) % grid.n_t;
    curve.calibration_defect = result.u.slices[slice_end][end_cell] -
                               result.u.slices[slice_start][cells[0]] - curve.action -
                               steps * grid.dt() * result.alpha;
    return curve;
}

} // namespace matherkit
