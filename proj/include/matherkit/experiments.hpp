#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "matherkit/relations.hpp"

namespace matherkit {

/// One-sided Hausdorff excess sup_{a in A} min_{b in B} d(a,b).
inline double hausdorff_excess(const std::vector<std::vector<double>>& A,
                               const std::vector<std::vector<double>>& B,
                               const std::vector<bool>& wrap) {
    if (A.empty()) throw EmptySet("A");
    if (B.empty()) throw EmptySet("B");
    double worst = 0.0;
    for (const auto& a : A) {
        double nn = kInf;
        for (const auto& b : B) nn = std::min(nn, wrapped_dist(a, b, wrap));
        worst = std::max(worst, nn);
    }
    return worst;
}

inline double hausdorff_excess(const Grid& grid, const std::vector<SamplePoint>& A,
                               const std::vector<SamplePoint>& B) {
    if (A.empty()) throw EmptySet("A");
    if (B.empty()) throw EmptySet("B");
    double worst = 0.0;
    for (const auto& a : A) worst = std::max(worst, distance_to_set(grid, a, B));
    return worst;
}

/// Shared knobs of the solve -> barrier -> decomposition pipeline.
struct PipelineParams {
    int sample_count = 24;
    int T_min = 4;
    int T_max = 16;
    int n_cal = 2;
    double tol_fix = 1e-12;
    int max_iters = 20000;
    double tol_cal = 1e-4;
    double tol_aubry = 1e-4;
    double tol_class = 5e-4;
    double tol_tail = 1e-3;
    double tol_dom = 1e-3;
    double tol_rel = -1.0; // auto: 3x measured domination defect
    bool record_full = false;
    std::vector<double> eps_schedule = {0.5, 0.25, 0.1, 0.05};
    int node_cap = 800;
};

/// Everything one Lagrangian contributes to an experiment run.
struct PipelineResult {
    Grid grid;
    double alpha = 0.0;
    WeakKamResult wk;
    double dom_defect = 0.0;
    BarrierTable table;
    AubryDecomposition dec;
    CalibratedSets sets;                 // calibrated structure of the solver solution
    CalibratedSets mane;                 // union over the solution family
    std::vector<SamplePoint> aubry_lifts;
    std::vector<WeakKamResult> family;   // solver solution + class representatives

    double tol_rel_effective(const PipelineParams& p) const {
        if (p.tol_rel >= 0.0) return p.tol_rel;
        return std::max(3.0 * std::abs(dom_defect), 1e-8);
    }
};

/// Evenly spaced base samples on the t = 0 fiber.
inline std::vector<SamplePoint> fiber_samples(const Grid& grid, int count) {
    count = std::min(count, grid.n_cells());
    std::vector<SamplePoint> samples;
    for (int i = 0; i < count; ++i) {
        SamplePoint s;
        s.t_idx = 0;
        s.cell = int(std::size_t(i) * grid.n_cells() / count);
        samples.push_back(s);
    }
    return samples;
}

/// Wraps a value table (typically a barrier field) into a solution record by
/// recomputing its argmin predecessor map.
inline WeakKamResult make_solution(const ValueFunction& u, double alpha,
                                   const CostModel& model) {
    WeakKamResult res;
    res.u = u;
    res.alpha = alpha;
    res.predecessor.assign(model.grid().n_t, {});
    std::vector<double> scratch;
    for (int t = 0; t < model.grid().n_t; ++t) {
        int nxt = (t + 1) % model.grid().n_t;
        model.sweep(u.slices[t], t, scratch, &res.predecessor[nxt]);
    }
    return res;
}

/// Representative of a static class: the member with the cleanest (lowest)
/// barrier diagonal.
inline int dec_rep_source(const AubryDecomposition& dec, const BarrierTable& table,
                          const std::vector<int>& cls) {
    int best = dec.aubry[cls.front()];
    for (int pos : cls) {
        int idx = dec.aubry[pos];
        if (table.h[idx][idx] < table.h[best][best]) best = idx;
    }
    return best;
}

inline PipelineResult run_pipeline(const LagrangianSpec& spec, const Grid& grid,
                                   const PipelineParams& p) {
    CostModel model(spec, grid);
    PipelineResult out;
    out.grid = grid;
    out.wk = solve_weak_kam(model, p.tol_fix, p.max_iters);
    out.alpha = out.wk.alpha;
    out.dom_defect = check_dominated(out.wk.u, model, out.alpha).max_defect;

    auto samples = fiber_samples(grid, p.sample_count);
    out.table = compute_barrier(model, out.alpha, samples, samples, p.T_min, p.T_max,
                                p.record_full, p.tol_tail);
    out.dec = aubry_decomposition(out.table, p.tol_aubry, p.tol_class);
    out.sets = calibrated_sets(out.wk, model, p.n_cal, p.tol_cal);

    // the Aubry set carries the whole time fiber of each retained cell
    for (int idx : out.dec.aubry) {
        const SamplePoint& s = out.table.sources[idx];
        for (int t = 0; t < grid.n_t; ++t)
            out.aubry_lifts.push_back(out.sets.lifted(t, s.cell));
    }

    out.family.push_back(out.wk);
    if (p.record_full) {
        for (const auto& cls : out.dec.classes) {
            int rep = dec_rep_source(out.dec, out.table, cls);
            out.family.push_back(
                make_solution(weak_kam_from_barrier(out.table, rep), out.alpha, model));
        }
    }
    out.mane = mane_set(model, out.family, p.n_cal, p.tol_cal, out.aubry_lifts);
    return out;
}

/// Potential perturbation sequence L_k = base + a_k * delta with a
/// nonincreasing amplitude schedule.
struct PerturbationSequence {
    LagrangianSpec base;
    Potential delta;
    std::vector<double> amplitudes;

    LagrangianSpec member(std::size_t k) const {
        LagrangianSpec spec = base;
        for (TrigTerm term : delta.terms) {
            term.amplitude *= amplitudes[k];
            spec.potential.terms.push_back(term);
        }
        return spec;
    }
    std::size_t size() const { return amplitudes.size(); }
    double sup_g(std::size_t k) const {
        return amplitudes[k] * delta.sup_abs();
    }
};

inline PerturbationSequence one_over_k_sequence(const LagrangianSpec& base,
                                                const Potential& delta, int k_max,
                                                double scale = 1.0) {
    PerturbationSequence seq;
    seq.base = base;
    seq.delta = delta;
    for (int k = 1; k <= k_max; ++k) seq.amplitudes.push_back(scale / k);
    return seq;
}

struct SemiKEntry {
    int k = 0;
    double amplitude = 0.0;
    double alpha = 0.0;
    std::vector<SamplePoint> aubry_lifts;
    double excess_into_base = 0.0;   // e_k of the theorem
    double excess_base_into_k = 0.0; // reverse direction; stays large in general
};

struct SemicontinuityReport {
    double base_alpha = 0.0;
    std::vector<SamplePoint> base_aubry_lifts;
    std::vector<SemiKEntry> entries;
    double U_radius = 0.0;
    std::optional<int> k0;
    std::vector<SamplePoint> limsup_set;
    double limsup_to_recurrent_excess = 0.0;
    double headline = 0.0;
    ChainTransferReport transfer;
};

/// The semi-continuity harness: per-k pipelines, one-sided Hausdorff
/// tracking against the base Aubry set, the limsup containment check inside
/// the chain-recurrent part of the base Mane system, and the chain-relation
/// transfer of Aubry pairs into the limit system.
inline SemicontinuityReport run_semicontinuity(const PerturbationSequence& seq,
                                               const Grid& grid, PipelineParams params,
                                               double U_radius) {
    if (seq.size() == 0) throw Error("run_semicontinuity: empty sequence");
    SemicontinuityReport rep;
    rep.U_radius = U_radius;

    PipelineParams base_params = params;
    base_params.record_full = true; // base Mane system needs the solution family
    PipelineResult base = run_pipeline(seq.base, grid, base_params);
    rep.base_alpha = base.alpha;
    rep.base_aubry_lifts = base.aubry_lifts;

    std::vector<PipelineResult> runs(seq.size());
    std::vector<LagrangianSpec> members;
    for (std::size_t k = 0; k < seq.size(); ++k) members.push_back(seq.member(k));
    for (std::size_t k = 0; k < seq.size(); ++k) {
        try {
            runs[k] = run_pipeline(members[k], grid, params);
        } catch (const std::exception& e) {
            throw Error("pipeline failed at k=" + std::to_string(k + 1) + ": " + e.what());
        }
    }

    for (std::size_t k = 0; k < seq.size(); ++k) {
        SemiKEntry e;
        e.k = int(k + 1);
        e.amplitude = seq.amplitudes[k];
        e.alpha = runs[k].alpha;
        e.aubry_lifts = runs[k].aubry_lifts;
        e.excess_into_base = hausdorff_excess(grid, e.aubry_lifts, rep.base_aubry_lifts);
        e.excess_base_into_k = hausdorff_excess(grid, rep.base_aubry_lifts, e.aubry_lifts);
        rep.entries.push_back(std::move(e));
    }

    for (std::size_t k = 0; k < rep.entries.size(); ++k) {
        bool all_inside = true;
        for (std::size_t j = k; j < rep.entries.size(); ++j)
            all_inside = all_inside && rep.entries[j].excess_into_base <= U_radius;
        if (all_inside) {
            rep.k0 = rep.entries[k].k;
            break;
        }
    }

    // Chain system of the base Mane set (t = 0 section) and its recurrent part.
    auto [mane_nodes, mane_pos] = fiber_section(base.mane.mane, 0);
    std::vector<int> mane_contrib;
    for (std::size_t pos : mane_pos)
        mane_contrib.push_back(base.mane.mane_contributor[pos]);
    SampledSemiflow base_flow = chain_system(base.mane, mane_nodes, mane_contrib);
    rep.headline = headline_eps(params.eps_schedule, base_flow.resolution());
    ChainGraph g = build_chain_graph(base_flow, rep.headline);
    ChainDecomposition dec = chain_decomposition(g);
    std::vector<SamplePoint> recurrent_lifts;
    for (int idx : dec.recurrent) recurrent_lifts.push_back(mane_nodes[idx]);

    // limsup surrogate: section samples of the last run staying within the
    // headline distance of every tail run.
    std::size_t k_half = rep.entries.size() / 2;
    for (const auto& s : rep.entries.back().aubry_lifts) {
        if (s.t_idx != 0) continue;
        bool persistent = true;
        for (std::size_t j = k_half; j < rep.entries.size() && persistent; ++j)
            persistent = distance_to_set(grid, s, rep.entries[j].aubry_lifts) <= rep.headline;
        if (persistent) rep.limsup_set.push_back(s);
    }
    if (!rep.limsup_set.empty() && !recurrent_lifts.empty())
        rep.limsup_to_recurrent_excess =
            hausdorff_excess(grid, rep.limsup_set, recurrent_lifts);

    // Transfer of the per-k Aubry chain relation into the base system.
    std::vector<SampledSemiflow> flows;
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        std::vector<SamplePoint> section;
        for (int idx : runs[k].dec.aubry)
            section.push_back(runs[k].sets.lifted(0, runs[k].table.sources[idx].cell));
        std::vector<int> contrib(section.size(), 0);
        flows.push_back(chain_system(runs[k].sets, section, contrib));
        // endpoints inside the largest static class of run k: chain related there
        const auto& classes = runs[k].dec.classes;
        std::size_t big = 0;
        for (std::size_t c = 1; c < classes.size(); ++c)
            if (classes[c].size() > classes[big].size()) big = c;
        pairs.push_back({classes[big].front(), classes[big].back()});
    }
    double max_eps =
        *std::max_element(params.eps_schedule.begin(), params.eps_schedule.end());
    rep.transfer =
        limit_chain_transfer(flows, base_flow, pairs, params.eps_schedule, max_eps);
    return rep;
}

struct AlphaConvergenceRow {
    int k = 0;
    double alpha = 0.0;
    double gap = 0.0;   // |alpha_k - alpha_base|
    double sup_g = 0.0; // amplitude bound of the perturbation
};

struct AlphaConvergenceTable {
    double base_alpha = 0.0;
    std::vector<AlphaConvergenceRow> rows;
};

inline AlphaConvergenceTable alpha_convergence(const PerturbationSequence& seq,
                                               const Grid& grid,
                                               const PipelineParams& params) {
    AlphaConvergenceTable table;
    CostModel base_model(seq.base, grid);
    table.base_alpha = solve_weak_kam(base_model, params.tol_fix, params.max_iters).alpha;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        CostModel model(seq.member(k), grid);
        AlphaConvergenceRow row;
        row.k = int(k + 1);
        row.alpha = solve_weak_kam(model, params.tol_fix, params.max_iters).alpha;
        row.gap = std::abs(row.alpha - table.base_alpha);
        row.sup_g = seq.sup_g(k);
        table.rows.push_back(row);
    }
    return table;
}

struct CohomologyEntry {
    Vec c = {0.0, 0.0};
    double alpha = 0.0;
    std::vector<SamplePoint> aubry_lifts;
    Vec mean_rotation = {0.0, 0.0}; // mean displacement per period on the Aubry set
    double usc_excess_to_prev = 0.0;
};

struct CohomologySweep {
    std::vector<CohomologyEntry> entries;
};

/// Mean displacement per period of the calibrated forward walk from a
/// sample; nonzero in rotation regimes.
inline Vec mean_rotation_vector(const CalibratedSets& sets, const SamplePoint& start,
                                int periods) {
    Vec total = {0.0, 0.0};
    int t = start.t_idx, cell = start.cell;
    for (int s = 0; s < periods * sets.grid.n_t; ++s) {
        int nxt_cell = sets.forward[t][cell];
        Vec from = sets.grid.cell_center(cell), to = sets.grid.cell_center(nxt_cell);
        for (int i = 0; i < sets.grid.dim; ++i) total[i] += nearest_delta(from[i], to[i]);
        cell = nxt_cell;
        t = (t + 1) % sets.grid.n_t;
    }
    for (int i = 0; i < sets.grid.dim; ++i) total[i] /= periods;
    return total;
}

inline CohomologySweep cohomology_sweep(const LagrangianSpec& spec, const Grid& grid,
                                        const std::vector<Vec>& c_values,
                                        const PipelineParams& params) {
    if (c_values.empty()) throw Error("cohomology_sweep: empty cohomology grid");
    CohomologySweep sweep;
    for (const auto& c : c_values) {
        LagrangianSpec member = spec;
        member.one_form = c;
        PipelineResult run;
        try {
            run = run_pipeline(member, grid, params);
        } catch (const std::exception& e) {
            throw Error("pipeline failed at c=" + std::to_string(c[0]) + ": " + e.what());
        }
        CohomologyEntry e;
        e.c = c;
        e.alpha = run.alpha;
        e.aubry_lifts = run.aubry_lifts;
        if (!run.aubry_lifts.empty())
            e.mean_rotation =
                mean_rotation_vector(run.sets, run.aubry_lifts.front(), params.n_cal);
        if (!sweep.entries.empty())
            e.usc_excess_to_prev = hausdorff_excess(
                grid, e.aubry_lifts, sweep.entries.back().aubry_lifts);
        sweep.entries.push_back(std::move(e));
    }
    return sweep;
}

} // namespace matherkit
