#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "matherkit/errors.hpp"
#include "matherkit/parallel.hpp"
#include "matherkit/torus.hpp"

namespace matherkit {

/// Finite sample of a semi-flow: state vectors, their time-T images, and the
/// metric (Euclidean with optional periodic wrap per axis).
struct SampledSemiflow {
    std::vector<std::vector<double>> points;
    std::vector<std::vector<double>> step; // time-T image of each sample
    std::vector<bool> wrap;
    double T = 1.0;

    int size() const { return int(points.size()); }

    double dist(const std::vector<double>& a, const std::vector<double>& b) const {
        return wrapped_dist(a, b, wrap);
    }

    /// Largest nearest-neighbor gap between samples; the sampling resolution
    /// that enters the effective epsilon budget.
    double resolution() const {
        if (points.size() < 2) return 0.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double nn = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < points.size(); ++j)
                if (j != i) nn = std::min(nn, dist(points[i], points[j]));
            worst = std::max(worst, nn);
        }
        return worst;
    }

    /// Index of the sample nearest to x (lowest index on ties).
    int nearest(const std::vector<double>& x) const {
        int best = 0;
        double bd = dist(x, points[0]);
        for (int j = 1; j < size(); ++j) {
            double d = dist(x, points[j]);
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        return best;
    }
};

/// Directed jump graph: i -> j when flowing one step from i and jumping at
/// most eps lands on j. Paths encode (eps,T)-chains with uniform segments.
struct ChainGraph {
    double eps = 0.0;
    int node_count = 0;
    std::vector<std::vector<int>> edges;
};

inline ChainGraph build_chain_graph(const SampledSemiflow& flow, double eps) {
    if (!(eps > 0.0)) throw Error("build_chain_graph: eps must be positive");
    ChainGraph g;
    g.eps = eps;
    g.node_count = flow.size();
    g.edges.assign(flow.size(), {});
    parallel_for(std::size_t(flow.size()), [&](std::size_t i) {
        for (int j = 0; j < flow.size(); ++j)
            if (flow.dist(flow.step[i], flow.points[j]) <= eps)
                g.edges[i].push_back(j);
    });
    return g;
}

/// True iff a directed path of length >= 1 leads from i to j.
inline bool chain_relation(const ChainGraph& g, int i, int j) {
    if (i < 0 || j < 0 || i >= g.node_count || j >= g.node_count)
        throw Error("chain_relation: node index out of range");
    std::vector<bool> seen(g.node_count, false);
    std::queue<int> q;
    for (int v : g.edges[i])
        if (!seen[v]) {
            seen[v] = true;
            q.push(v);
        }
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == j) return true;
        for (int v : g.edges[u])
            if (!seen[v]) {
                seen[v] = true;
                q.push(v);
            }
    }
    return seen[j];
}

/// Chain-recurrent nodes, their partition into chain components (mutually
/// reachable classes) and the full reach relation.
struct ChainDecomposition {
    std::vector<int> recurrent;
    std::vector<std::vector<int>> components;
    std::vector<std::vector<bool>> reach; // paths of length >= 1
};

namespace detail {

/// Iterative Tarjan SCC; components come out in reverse topological order
/// and are normalized to sorted node lists afterwards.
inline std::vector<std::vector<int>> tarjan_scc(const std::vector<std::vector<int>>& adj) {
    const int n = int(adj.size());
    std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0), stack;
    std::vector<std::vector<int>> sccs;
    int counter = 0;

    struct Frame {
        int v;
        std::size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.edge < adj[f.v].size()) {
                int w = adj[f.v][f.edge++];
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                if (low[f.v] == index[f.v]) {
                    std::vector<int> scc;
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        scc.push_back(w);
                    } while (w != f.v);
                    std::sort(scc.begin(), scc.end());
                    sccs.push_back(std::move(scc));
                }
                int v = f.v;
                call.pop_back();
                if (!call.empty())
                    low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    std::sort(sccs.begin(), sccs.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
    return sccs;
}

} // namespace detail

inline ChainDecomposition chain_decomposition(const ChainGraph& g) {
    ChainDecomposition dec;
    const int n = g.node_count;

    dec.reach.assign(n, std::vector<bool>(n, false));
    parallel_for(std::size_t(n), [&](std::size_t i) {
        std::vector<bool>& row = dec.reach[i];
        std::vector<int> q;
        for (int v : g.edges[i])
            if (!row[v]) {
                row[v] = true;
                q.push_back(v);
            }
        while (!q.empty()) {
            int u = q.back();
            q.pop_back();
            for (int v : g.edges[u])
                if (!row[v]) {
                    row[v] = true;
                    q.push_back(v);
                }
        }
    });

    auto sccs = detail::tarjan_scc(g.edges);
    for (auto& scc : sccs) {
        bool recurrent = scc.size() > 1;
        if (!recurrent) {
            int v = scc[0];
            for (int w : g.edges[v])
                if (w == v) recurrent = true;
        }
        if (recurrent) {
            dec.components.push_back(scc);
            for (int v : scc) dec.recurrent.push_back(v);
        }
    }
    std::sort(dec.recurrent.begin(), dec.recurrent.end());
    return dec;
}

/// Subsystem on the n-fold image of the snapped step map (discrete X_k).
struct RestrictedFlow {
    SampledSemiflow flow;
    std::vector<int> original; // node index in the parent flow
};

inline RestrictedFlow restrict_omega(const SampledSemiflow& flow, int n_steps) {
    if (n_steps < 1) throw Error("restrict_omega: need n_steps >= 1");
    const int n = flow.size();
    std::vector<int> snap(n);
    for (int i = 0; i < n; ++i) snap[i] = flow.nearest(flow.step[i]);

    std::vector<bool> alive(n, true);
    for (int k = 0; k < n_steps; ++k) {
        std::vector<bool> next(n, false);
        for (int i = 0; i < n; ++i)
            if (alive[i]) next[snap[i]] = true;
        alive.swap(next);
    }

    RestrictedFlow out;
    out.flow.wrap = flow.wrap;
    out.flow.T = flow.T;
    for (int i = 0; i < n; ++i)
        if (alive[i]) {
            out.original.push_back(i);
            out.flow.points.push_back(flow.points[i]);
            out.flow.step.push_back(flow.step[i]);
        }
    return out;
}

/// Iterate the image restriction until the node set stabilizes: the discrete
/// X_infinity.
inline RestrictedFlow restrict_omega_stable(const SampledSemiflow& flow) {
    return restrict_omega(flow, std::max(1, flow.size()));
}

/// Minimal eps at which a chain from src reaches each node: minimax path
/// value over edge weights d(step(a), point(b)). Computed Dijkstra-style.
inline std::vector<double> bottleneck_eps(const SampledSemiflow& flow, int src) {
    const int n = flow.size();
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<bool> done(n, false);
    for (int j = 0; j < n; ++j) best[j] = flow.dist(flow.step[src], flow.points[j]);
    for (int round = 0; round < n; ++round) {
        int u = -1;
        double bu = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j)
            if (!done[j] && best[j] < bu) {
                bu = best[j];
                u = j;
            }
        if (u < 0) break;
        done[u] = true;
        for (int j = 0; j < n; ++j) {
            double w = std::max(bu, flow.dist(flow.step[u], flow.points[j]));
            if (w < best[j]) best[j] = w;
        }
    }
    return best;
}

/// Smallest schedule value at or above twice the sampling resolution; the
/// headline eps of a decreasing schedule. Falls back to the largest value
/// when the whole schedule sits below the resolution budget.
inline double headline_eps(const std::vector<double>& schedule, double resolution) {
    if (schedule.empty()) throw Error("headline_eps: empty schedule");
    double head = -1.0;
    for (double e : schedule)
        if (e >= 2.0 * resolution && (head < 0.0 || e < head)) head = e;
    if (head < 0.0) head = *std::max_element(schedule.begin(), schedule.end());
    return head;
}

struct ChainTransferEntry {
    std::size_t flow_index = 0;
    int limit_src = 0;
    int limit_dst = 0;
    double bottleneck = 0.0; // minimal eps making the relation hold
    double eps_pass = 0.0;   // smallest schedule eps >= bottleneck (inf if none)
};

struct ChainTransferReport {
    std::vector<ChainTransferEntry> entries;
    bool all_transferred = false;
    double worst_gap = 0.0; // largest bottleneck among the pairs
};

/// Checks that chain-related endpoint pairs of an accumulating family stay
/// chain related in the limit system. Each pair (i_k, j_k) lives in flows[k];
/// its endpoints are mapped to the nearest limit nodes. Throws HausdorffGap
/// when some flow's node set strays from the limit beyond hausdorff_tol.
inline ChainTransferReport limit_chain_transfer(
    const std::vector<SampledSemiflow>& flows, const SampledSemiflow& limit,
    const std::vector<std::pair<int, int>>& pairs,
    const std::vector<double>& eps_schedule, double hausdorff_tol) {
    if (flows.size() != pairs.size())
        throw Error("limit_chain_transfer: one pair per flow expected");
    if (limit.size() == 0) throw Error("limit_chain_transfer: empty limit system");
    if (eps_schedule.empty()) throw Error("limit_chain_transfer: empty eps schedule");

    for (std::size_t k = 0; k < flows.size(); ++k) {
        double excess = 0.0;
        for (const auto& p : flows[k].points) {
            double nn = std::numeric_limits<double>::infinity();
            for (const auto& q : limit.points) nn = std::min(nn, limit.dist(p, q));
            excess = std::max(excess, nn);
        }
        if (excess > hausdorff_tol) throw HausdorffGap(k, excess, hausdorff_tol);
    }

    ChainTransferReport rep;
    rep.all_transferred = true;
    double max_sched = *std::max_element(eps_schedule.begin(), eps_schedule.end());
    for (std::size_t k = 0; k < flows.size(); ++k) {
        ChainTransferEntry e;
        e.flow_index = k;
        e.limit_src = limit.nearest(flows[k].points[pairs[k].first]);
        e.limit_dst = limit.nearest(flows[k].points[pairs[k].second]);
        e.bottleneck = bottleneck_eps(limit, e.limit_src)[e.limit_dst];
        e.eps_pass = std::numeric_limits<double>::infinity();
        for (double eps : eps_schedule)
            if (eps >= e.bottleneck) e.eps_pass = std::min(e.eps_pass, eps);
        if (e.bottleneck > max_sched) rep.all_transferred = false;
        rep.worst_gap = std::max(rep.worst_gap, e.bottleneck);
        rep.entries.push_back(e);
    }
    return rep;
}

} // namespace matherkit
