#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "matherkit/barrier.hpp"
#include "matherkit/conley.hpp"

namespace matherkit {

/// The variational relation r (u(y)-u(x) >= h(x,y) - tol) and the chain
/// relation c on a common sample set, with the per-eps reachability stack.
struct RelationTable {
    int n = 0;
    std::vector<SamplePoint> samples;
    std::vector<std::vector<bool>> r;
    std::vector<std::vector<bool>> c; // at the headline eps
    std::vector<double> eps_schedule;
    std::vector<std::vector<std::vector<bool>>> c_per_eps;
    double headline = 0.0;
    double resolution = 0.0;
    double eps_effective = 0.0; // headline + sampling resolution
    double tol_rel = 0.0;
    double transitivity_defect = 0.0;
};

/// Fills the r part from a weak KAM solution and a square barrier table.
/// Reports the worst transitivity slack over relating triples.
inline RelationTable relation_Ru(const ValueFunction& u, const BarrierTable& table,
                                 double tol_rel) {
    if (!table.square()) throw Error("relation_Ru: barrier table is not square");
    RelationTable rel;
    rel.samples = table.sources;
    rel.n = int(rel.samples.size());
    rel.tol_rel = tol_rel;
    rel.r.assign(rel.n, std::vector<bool>(rel.n, false));

    std::vector<double> uval(rel.n);
    for (int i = 0; i < rel.n; ++i)
        uval[i] = u.slices[rel.samples[i].t_idx][rel.samples[i].cell];

    for (int i = 0; i < rel.n; ++i)
        for (int j = 0; j < rel.n; ++j)
            rel.r[i][j] = uval[j] - uval[i] >= table.h[i][j] - tol_rel;

    for (int i = 0; i < rel.n; ++i)
        for (int j = 0; j < rel.n; ++j) {
            if (!rel.r[i][j]) continue;
            for (int k = 0; k < rel.n; ++k) {
                if (!rel.r[j][k]) continue;
                double slack = table.h[i][k] - (uval[k] - uval[i]);
                rel.transitivity_defect = std::max(rel.transitivity_defect, slack);
            }
        }
    return rel;
}

/// Chain system over the calibrated set: nodes are the retained phase
/// samples, the step is the one-period calibrated successor, and the metric
/// is the product metric on (t, q mod 1, v).
inline SampledSemiflow chain_system(const CalibratedSets& sets,
                                    const std::vector<SamplePoint>& nodes,
                                    const std::vector<int>& contributor) {
    SampledSemiflow flow;
    flow.wrap = lift_wrap_flags(sets.grid);
    flow.T = 1.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const CalibratedSets& member =
            sets.members.empty() ? sets : sets.members[contributor[i]];
        flow.points.push_back(lift_coords(sets.grid, nodes[i]));
        flow.step.push_back(lift_coords(sets.grid, forward_period(member, nodes[i], 1)));
    }
    return flow;
}

/// Builds the c part: chain reachability between the query samples, per eps
/// of the (decreasing) schedule. For a single solution the ambient system is
/// the sampled graph Gamma(L,u) -- chains between calibrated points travel
/// along rays that pass through lifts of arbitrary base points, so the
/// filtered set alone would dead-end. For a Mane union the retained samples
/// themselves form the system.
inline RelationTable relation_Cu(const CalibratedSets& sets,
                                 const std::vector<SamplePoint>& query,
                                 const std::vector<double>& eps_schedule,
                                 int node_cap = 800) {
    const std::vector<SamplePoint>& full_pool = sets.mane.empty() ? sets.gamma : sets.mane;
    if (full_pool.empty()) throw Error("relation_Cu: empty calibrated sample set");

    // One-period steps keep chains inside a time fiber whenever eps is below
    // the slice spacing, so the system reduces to the section of the query
    // fiber; other fibers would only burn node budget.
    int fiber = query.empty() ? 0 : query.front().t_idx;
    std::vector<SamplePoint> pool;
    std::vector<std::size_t> pool_pos;
    for (std::size_t k = 0; k < full_pool.size(); ++k)
        if (full_pool[k].t_idx == fiber) {
            pool.push_back(full_pool[k]);
            pool_pos.push_back(k);
        }
    if (pool.empty()) throw Error("relation_Cu: no calibrated samples on the query fiber");

    std::vector<SamplePoint> nodes;
    std::vector<int> contributor;
    std::vector<int> query_node(query.size(), -1);

    auto push_node = [&](const SamplePoint& s, int contrib) {
        nodes.push_back(s);
        contributor.push_back(contrib);
    };
    // query samples first so they always survive the cap
    for (std::size_t qi = 0; qi < query.size(); ++qi) {
        int contrib = 0;
        if (!sets.mane.empty()) {
            for (std::size_t k = 0; k < pool.size(); ++k)
                if (same_base(pool[k], query[qi]))
                    contrib = sets.mane_contributor[pool_pos[k]];
        }
        query_node[qi] = int(nodes.size());
        push_node(query[qi], contrib);
    }
    std::size_t stride = pool.size() <= std::size_t(node_cap)
                             ? 1
                             : (pool.size() + node_cap - 1) / node_cap;
    for (std::size_t k = 0; k < pool.size(); k += stride) {
        bool dup = false;
        for (std::size_t qi = 0; qi < query.size() && !dup; ++qi)
            dup = same_base(pool[k], query[qi]);
        if (!dup)
            push_node(pool[k],
                      sets.mane.empty() ? 0 : sets.mane_contributor[pool_pos[k]]);
    }

    SampledSemiflow flow = chain_system(sets, nodes, contributor);

    RelationTable rel;
    rel.samples = query;
    rel.n = int(query.size());
    rel.eps_schedule = eps_schedule;
    rel.resolution = flow.resolution();
    rel.headline = headline_eps(eps_schedule, rel.resolution);
    rel.eps_effective = rel.headline + rel.resolution;

    for (double eps : eps_schedule) {
        ChainGraph g = build_chain_graph(flow, eps);
        ChainDecomposition dec = chain_decomposition(g);
        std::vector<std::vector<bool>> cm(rel.n, std::vector<bool>(rel.n, false));
        for (int i = 0; i < rel.n; ++i)
            for (int j = 0; j < rel.n; ++j)
                cm[i][j] = dec.reach[query_node[i]][query_node[j]];
        rel.c_per_eps.push_back(cm);
        if (eps == rel.headline) rel.c = cm;
    }
    if (rel.c.empty()) rel.c.assign(rel.n, std::vector<bool>(rel.n, false));
    return rel;
}

/// Merge of an r table and a c table computed on the same samples.
inline RelationTable merge_relations(const RelationTable& ru, const RelationTable& cu) {
    if (ru.n != cu.n) throw Error("merge_relations: sample sets differ");
    RelationTable rel = cu;
    rel.r = ru.r;
    rel.tol_rel = ru.tol_rel;
    rel.transitivity_defect = ru.transitivity_defect;
    return rel;
}

struct EpsVerdict {
    double eps = 0.0;
    bool oneway_ok = false;      // r => c
    bool coincidence_ok = false; // r <=> c
};

/// Violating pairs of the one-way implication and of full coincidence.
struct CoincidenceReport {
    std::vector<std::pair<int, int>> oneway_violations;      // r true, c false
    std::vector<std::pair<int, int>> coincidence_violations; // c true, r false
    std::vector<EpsVerdict> verdicts;
    double headline = 0.0;
    bool coincidence_holds = false;
};

inline CoincidenceReport check_oneway(const RelationTable& rel) {
    CoincidenceReport rep;
    rep.headline = rel.headline;
    for (int i = 0; i < rel.n; ++i)
        for (int j = 0; j < rel.n; ++j) {
            if (rel.r[i][j] && !rel.c[i][j]) rep.oneway_violations.push_back({i, j});
            if (rel.c[i][j] && !rel.r[i][j]) rep.coincidence_violations.push_back({i, j});
        }
    for (std::size_t e = 0; e < rel.eps_schedule.size(); ++e) {
        EpsVerdict v;
        v.eps = rel.eps_schedule[e];
        v.oneway_ok = true;
        v.coincidence_ok = true;
        const auto& cm = rel.c_per_eps[e];
        for (int i = 0; i < rel.n; ++i)
            for (int j = 0; j < rel.n; ++j) {
                if (rel.r[i][j] && !cm[i][j]) v.oneway_ok = false;
                if (cm[i][j] && !rel.r[i][j]) v.coincidence_ok = false;
            }
        v.coincidence_ok = v.coincidence_ok && v.oneway_ok;
        rep.verdicts.push_back(v);
    }
    rep.coincidence_holds =
        rep.oneway_violations.empty() && rep.coincidence_violations.empty();
    return rep;
}

struct GapProfile {
    std::vector<double> values; // sorted image of (u-v) on Aubry samples
    double max_gap = 0.0;
    int cluster_count = 0;      // value clusters split at gaps above value_tol
    bool matches_class_count = false;
};

/// Checks of the computable rungs of the hypothesis ladder. Hausdorff
/// dimension and 1-Hausdorff measure (rungs 2 and 3) are not evaluated.
struct LadderReport {
    int h1_class_count = 0;
    std::vector<GapProfile> h5_profiles; // one per solution pair
    int h7_component_count = 0;          // spatial components of Aubry samples
    bool h7_matches = false;
    bool implication_1_to_7 = false;     // finite classes realized as components
    std::string h2_h3_note = "not evaluated";
};

/// h1: class count (finite by construction). h5: sorted image of (u-v) on
/// Aubry samples, its largest gap, and the cluster structure at value_tol
/// (differences of solutions are constant on a static class, so clusters
/// should match classes). h7: spatial connected components of the Aubry
/// samples versus the class count.
inline LadderReport ladder_check(
    const AubryDecomposition& dec, const BarrierTable& table,
    const std::vector<std::pair<ValueFunction, ValueFunction>>& solution_pairs,
    double spatial_eps, double value_tol = 1e-3) {
    if (solution_pairs.empty()) throw Error("ladder_check: need at least one pair");
    LadderReport rep;
    rep.h1_class_count = int(dec.classes.size());

    for (const auto& [u, v] : solution_pairs) {
        GapProfile prof;
        for (int a : dec.aubry) {
            const SamplePoint& s = table.sources[a];
            prof.values.push_back(u.slices[s.t_idx][s.cell] - v.slices[s.t_idx][s.cell]);
        }
        std::sort(prof.values.begin(), prof.values.end());
        prof.cluster_count = prof.values.empty() ? 0 : 1;
        for (std::size_t i = 1; i < prof.values.size(); ++i) {
            double gap = prof.values[i] - prof.values[i - 1];
            prof.max_gap = std::max(prof.max_gap, gap);
            if (gap > value_tol) ++prof.cluster_count;
        }
        prof.matches_class_count = prof.cluster_count == rep.h1_class_count;
        rep.h5_profiles.push_back(std::move(prof));
    }

    // spatial components at spatial_eps in the base metric (t wrap, q wrap)
    const int m = int(dec.aubry.size());
    std::vector<int> comp(m, -1);
    int n_comp = 0;
    auto base_dist = [&](int a, int b) {
        const SamplePoint& x = table.sources[dec.aubry[a]];
        const SamplePoint& y = table.sources[dec.aubry[b]];
        double dt2 = circle_dist(x.t_idx * table.grid.dt(), y.t_idx * table.grid.dt());
        double s = dt2 * dt2;
        Vec qa = table.grid.cell_center(x.cell), qb = table.grid.cell_center(y.cell);
        for (int i = 0; i < table.grid.dim; ++i) {
            double d = nearest_delta(qa[i], qb[i]);
            s += d * d;
        }
        return std::sqrt(s);
    };
    for (int a = 0; a < m; ++a) {
        if (comp[a] >= 0) continue;
        std::vector<int> stack = {a};
        comp[a] = n_comp;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (int y = 0; y < m; ++y)
                if (comp[y] < 0 && base_dist(x, y) <= spatial_eps) {
                    comp[y] = n_comp;
                    stack.push_back(y);
                }
        }
        ++n_comp;
    }
    rep.h7_component_count = n_comp;
    rep.h7_matches = n_comp == rep.h1_class_count;
    // the sampled surrogate of 1 => 7: the (finite) class partition is
    // realized by the spatial components
    rep.implication_1_to_7 = rep.h7_matches;
    return rep;
}

/// Piecewise-linear primitive of the indicator of a tol-fattened finite set;
/// 1-Lipschitz and nondecreasing by construction.
class FattenedPrimitive {
public:
    FattenedPrimitive(std::vector<double> values, double fatten) {
        std::sort(values.begin(), values.end());
        for (double v : values) {
            double lo = v - fatten, hi = v + fatten;
            if (!intervals_.empty() && lo <= intervals_.back().second)
                intervals_.back().second = std::max(intervals_.back().second, hi);
            else
                intervals_.push_back({lo, hi});
        }
        double acc = 0.0;
        for (auto& iv : intervals_) {
            starts_.push_back(acc);
            acc += iv.second - iv.first;
        }
    }

    double operator()(double s) const {
        double val = 0.0;
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            if (s <= intervals_[i].first) break;
            val = starts_[i] + std::min(s, intervals_[i].second) - intervals_[i].first;
        }
        return val;
    }

private:
    std::vector<std::pair<double, double>> intervals_;
    std::vector<double> starts_;
};

struct FathiResult {
    ValueFunction w;
    std::vector<double> image_values; // (v-u) on Aubry samples
    double domination_defect = 0.0;
    double barrier_defect = 0.0; // max of w(y)-w(x)-h(x,y) on Aubry pairs
};

/// The interpolation construction: w = u + theta_A((v-u)) on Aubry samples,
/// extended to the grid by w(x) = min_a [w(a) + h(a,x)]. Throws
/// DominationFailure when the extension misses the weak KAM inequality by
/// more than tol_dom.
inline FathiResult fathi_interpolate(const ValueFunction& u, const ValueFunction& v,
                                     const AubryDecomposition& dec,
                                     const BarrierTable& table, const CostModel& model,
                                     double alpha, double fatten_tol, double tol_dom) {
    if (!table.has_full_fields)
        throw CoverageGap("fathi_interpolate needs full-grid barrier fields");
    const Grid& grid = table.grid;

    FathiResult out;
    for (int a : dec.aubry) {
        const SamplePoint& s = table.sources[a];
        out.image_values.push_back(v.slices[s.t_idx][s.cell] - u.slices[s.t_idx][s.cell]);
    }
    FattenedPrimitive theta(out.image_values, fatten_tol);

    std::vector<double> w_aubry(dec.aubry.size());
    for (std::size_t k = 0; k < dec.aubry.size(); ++k) {
        const SamplePoint& s = table.sources[dec.aubry[k]];
        w_aubry[k] = u.slices[s.t_idx][s.cell] + theta(out.image_values[k]);
    }

    out.w.grid = grid;
    out.w.slices.assign(grid.n_t, std::vector<double>(grid.n_cells(), kInf));
    for (std::size_t k = 0; k < dec.aubry.size(); ++k) {
        const ValueFunction& field = table.full_fields[dec.aubry[k]];
        for (int t = 0; t < grid.n_t; ++t)
            for (int c = 0; c < grid.n_cells(); ++c)
                out.w.slices[t][c] =
                    std::min(out.w.slices[t][c], w_aubry[k] + field.slices[t][c]);
    }

    for (std::size_t a = 0; a < dec.aubry.size(); ++a)
        for (std::size_t b = 0; b < dec.aubry.size(); ++b) {
            const SamplePoint& sa = table.sources[dec.aubry[a]];
            const SamplePoint& sb = table.sources[dec.aubry[b]];
            double lhs = out.w.slices[sb.t_idx][sb.cell] - out.w.slices[sa.t_idx][sa.cell];
            out.barrier_defect =
                std::max(out.barrier_defect, lhs - table.h[dec.aubry[a]][dec.aubry[b]]);
        }

    DominationReport dom = check_dominated(out.w, model, alpha);
    out.domination_defect = dom.max_defect;
    if (dom.max_defect > tol_dom)
        throw DominationFailure(dom.max_defect, dom.witness_t, dom.witness_dst);
    return out;
}

} // namespace matherkit
