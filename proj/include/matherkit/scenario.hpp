#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "matherkit/config.hpp"
#include "matherkit/io.hpp"
#include "matherkit/version.hpp"

namespace matherkit {

/// What a completed run wrote and how long each stage took. Wall-clock
/// figures live only here; every other output is byte-deterministic.
struct RunManifest {
    std::string config_hash;
    std::string version = kVersion;
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::string> files;
};

namespace rundetail {

class StageClock {
public:
    explicit StageClock(RunManifest& manifest) : manifest_(manifest) {}
    template <typename F>
    auto time(const std::string& name, F&& fn) {
        auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            manifest_.stage_seconds.push_back({name, seconds_since(start)});
        } else {
            auto out = fn();
            manifest_.stage_seconds.push_back({name, seconds_since(start)});
            return out;
        }
    }

private:
    static double seconds_since(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
    RunManifest& manifest_;
};

inline void emit(RunManifest& manifest, const std::filesystem::path& dir,
                 const std::string& name, const std::string& content) {
    atomic_write(dir / name, content);
    manifest.files.push_back(name);
}

inline ordered_json sample_json(const Grid& grid, const SamplePoint& s) {
    ordered_json j;
    j["t_idx"] = s.t_idx;
    j["cell"] = s.cell;
    Vec q = grid.cell_center(s.cell);
    j["q"] = normalized(q[0]);
    if (grid.dim == 2) j["q2"] = normalized(q[1]);
    if (s.has_velocity) {
        j["v"] = normalized(s.v[0]);
        if (grid.dim == 2) j["v2"] = normalized(s.v[1]);
    }
    return j;
}

inline ordered_json relations_json(const RelationTable& rel, const CoincidenceReport& full,
                                   const CoincidenceReport& restricted) {
    ordered_json j;
    j["eps"] = normalized(rel.headline);
    j["eps_effective"] = normalized(rel.eps_effective);
    j["resolution"] = normalized(rel.resolution);
    j["tol_rel"] = normalized(rel.tol_rel);
    j["oneway_violations"] = ordered_json::array();
    for (auto [a, b] : full.oneway_violations)
        j["oneway_violations"].push_back({a, b});
    j["coincidence_violations"] = ordered_json::array();
    for (auto [a, b] : restricted.coincidence_violations)
        j["coincidence_violations"].push_back({a, b});
    j["coincidence_holds_on_calibrated_set"] = restricted.coincidence_holds;
    ordered_json verdicts = ordered_json::array();
    for (const auto& v : full.verdicts) {
        ordered_json e;
        e["eps"] = normalized(v.eps);
        e["oneway_ok"] = v.oneway_ok;
        verdicts.push_back(e);
    }
    j["verdicts"] = verdicts;
    return j;
}

inline ordered_json ladder_json(const LadderReport& rep) {
    ordered_json j;
    j["h1"] = rep.h1_class_count;
    auto profile_json = [](const GapProfile& prof) {
        ordered_json p;
        ordered_json vals = ordered_json::array();
        for (double v : prof.values) vals.push_back(normalized(v));
        p["values"] = vals;
        p["max_gap"] = normalized(prof.max_gap);
        p["cluster_count"] = prof.cluster_count;
        p["matches_class_count"] = prof.matches_class_count;
        return p;
    };
    j["h5"] = profile_json(rep.h5_profiles.front());
    if (rep.h5_profiles.size() > 1) {
        ordered_json extra = ordered_json::array();
        for (std::size_t k = 1; k < rep.h5_profiles.size(); ++k)
            extra.push_back(profile_json(rep.h5_profiles[k]));
        j["h5_extra_pairs"] = extra;
    }
    j["h7"] = {{"component_count", rep.h7_component_count},
               {"class_count", rep.h1_class_count},
               {"matches", rep.h7_matches}};
    j["h2_h3"] = rep.h2_h3_note;
    return j;
}

/// Relation tables restricted to sample positions inside the calibrated set.
inline BarrierTable subtable(const BarrierTable& table, const std::vector<int>& keep) {
    BarrierTable sub;
    sub.grid = table.grid;
    sub.alpha = table.alpha;
    sub.T_min = table.T_min;
    sub.T_max = table.T_max;
    for (int i : keep) {
        sub.sources.push_back(table.sources[i]);
        sub.targets.push_back(table.targets[i]);
    }
    sub.h.assign(keep.size(), std::vector<double>(keep.size(), 0.0));
    for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = 0; b < keep.size(); ++b)
            sub.h[a][b] = table.h[keep[a]][keep[b]];
    return sub;
}

inline void run_solve(const ScenarioConfig& cfg, RunManifest& manifest,
                      const std::filesystem::path& dir, StageClock& clock) {
    CostModel model(cfg.spec, cfg.grid);
    WeakKamResult wk = clock.time("solve", [&] {
        return solve_weak_kam(model, cfg.params.tol_fix, cfg.params.max_iters);
    });
    emit(manifest, dir, "alpha.json", weak_kam_json(wk).dump(2) + "\n");
    emit(manifest, dir, "u.csv", value_function_csv(wk.u));
}

inline void run_barrier(const ScenarioConfig& cfg, RunManifest& manifest,
                        const std::filesystem::path& dir, StageClock& clock) {
    PipelineResult res =
        clock.time("pipeline", [&] { return run_pipeline(cfg.spec, cfg.grid, cfg.params); });
    emit(manifest, dir, "alpha.json", weak_kam_json(res.wk).dump(2) + "\n");
    emit(manifest, dir, "u.csv", value_function_csv(res.wk.u));
    emit(manifest, dir, "barrier.csv", barrier_csv(res.table));
    ordered_json aubry = aubry_json(res.dec);
    ordered_json samples = ordered_json::array();
    for (const auto& s : res.table.sources) samples.push_back(sample_json(cfg.grid, s));
    aubry["samples"] = samples;
    emit(manifest, dir, "aubry.json", aubry.dump(2) + "\n");
}

inline void run_coincidence(const ScenarioConfig& cfg, RunManifest& manifest,
                            const std::filesystem::path& dir, StageClock& clock) {
    PipelineResult res =
        clock.time("pipeline", [&] { return run_pipeline(cfg.spec, cfg.grid, cfg.params); });
    CostModel model(cfg.spec, cfg.grid);
    double tol_rel = res.tol_rel_effective(cfg.params);

    emit(manifest, dir, "alpha.json", weak_kam_json(res.wk).dump(2) + "\n");
    emit(manifest, dir, "barrier.csv", barrier_csv(res.table));
    emit(manifest, dir, "aubry.json", aubry_json(res.dec).dump(2) + "\n");

    RelationTable rel = clock.time("relations", [&] {
        std::vector<SamplePoint> query;
        for (const auto& s : res.table.sources)
            query.push_back(res.sets.lifted(s.t_idx, s.cell));
        return merge_relations(
            relation_Ru(res.wk.u, res.table, tol_rel),
            relation_Cu(res.sets, query, cfg.params.eps_schedule, cfg.params.node_cap));
    });
    CoincidenceReport full = check_oneway(rel);

    // coincidence proper is judged on samples inside the calibrated set
    std::vector<int> inside;
    for (int i = 0; i < rel.n; ++i) {
        const SamplePoint& s = res.table.sources[i];
        if (res.sets.defect[s.t_idx][s.cell] <= cfg.params.tol_cal) inside.push_back(i);
    }
    CoincidenceReport restricted;
    if (!inside.empty()) {
        std::vector<SamplePoint> query;
        for (int i : inside) {
            const SamplePoint& s = res.table.sources[i];
            query.push_back(res.sets.lifted(s.t_idx, s.cell));
        }
        RelationTable rel_inside = merge_relations(
            relation_Ru(res.wk.u, subtable(res.table, inside), tol_rel),
            relation_Cu(res.sets, query, cfg.params.eps_schedule, cfg.params.node_cap));
        restricted = check_oneway(rel_inside);
    } else {
        restricted.coincidence_holds = true;
    }
    emit(manifest, dir, "relations.json",
         relations_json(rel, full, restricted).dump(2) + "\n");

    // hypothesis ladder on the class solutions
    std::vector<std::pair<ValueFunction, ValueFunction>> pairs;
    if (res.family.size() >= 3)
        pairs.push_back({res.family[1].u, res.family[2].u});
    else
        pairs.push_back({res.family.front().u, res.family.back().u});
    double spacing = 1.0 / std::max(1, cfg.params.sample_count);
    LadderReport ladder =
        ladder_check(res.dec, res.table, pairs, 2.0 * spacing, cfg.params.tol_aubry);
    emit(manifest, dir, "ladder.json", ladder_json(ladder).dump(2) + "\n");

    // interpolation construction on the same pair
    FathiResult fathi = clock.time("fathi", [&] {
        return fathi_interpolate(pairs[0].first, pairs[0].second, res.dec, res.table,
                                 model, res.alpha, cfg.params.tol_aubry,
                                 cfg.params.tol_dom);
    });
    ordered_json fj;
    fj["domination_defect"] = normalized(fathi.domination_defect);
    fj["barrier_defect"] = normalized(fathi.barrier_defect);
    ordered_json vals = ordered_json::array();
    for (double v : fathi.image_values) vals.push_back(normalized(v));
    fj["image_values"] = vals;
    emit(manifest, dir, "fathi.json", fj.dump(2) + "\n");

    // chain system of the Mane union on the t=0 section
    auto [nodes, pos] = fiber_section(res.mane.mane, 0);
    std::vector<int> contrib;
    for (std::size_t k : pos) contrib.push_back(res.mane.mane_contributor[k]);
    SampledSemiflow flow = chain_system(res.mane, nodes, contrib);
    double head = headline_eps(cfg.params.eps_schedule, flow.resolution());
    ChainGraph graph = build_chain_graph(flow, head);
    ChainDecomposition dec = chain_decomposition(graph);
    emit(manifest, dir, "mane_edges.csv", chain_edges_csv(graph));
    ordered_json cj = decomposition_json(head, dec);
    cj["tail_forward"] = normalized(res.mane.mane_tail_forward);
    cj["tail_backward"] = normalized(res.mane.mane_tail_backward);
    emit(manifest, dir, "mane_chain.json", cj.dump(2) + "\n");
}

inline void run_semicontinuity_scenario(const ScenarioConfig& cfg, RunManifest& manifest,
                                        const std::filesystem::path& dir,
                                        StageClock& clock) {
    PerturbationSequence seq = one_over_k_sequence(
        cfg.spec, cosine_potential(1.0), cfg.k_max, cfg.tilt_scale);
    double U_radius = cfg.U_radius_cells * cfg.grid.dq();
    SemicontinuityReport rep = clock.time("semicontinuity", [&] {
        return run_semicontinuity(seq, cfg.grid, cfg.params, U_radius);
    });
    AlphaConvergenceTable alpha = clock.time("alpha_convergence", [&] {
        return alpha_convergence(seq, cfg.grid, cfg.params);
    });

    ordered_json j;
    j["base_alpha"] = normalized(rep.base_alpha);
    j["U_radius"] = normalized(U_radius);
    j["k0"] = rep.k0.has_value() ? ordered_json(*rep.k0) : ordered_json(nullptr);
    j["headline_eps"] = normalized(rep.headline);
    j["limsup_to_recurrent_excess"] = normalized(rep.limsup_to_recurrent_excess);
    j["limsup_size"] = rep.limsup_set.size();
    j["transfer_ok"] = rep.transfer.all_transferred;
    j["transfer_worst_gap"] = normalized(rep.transfer.worst_gap);
    ordered_json entries = ordered_json::array();
    for (const auto& e : rep.entries) {
        ordered_json ej;
        ej["k"] = e.k;
        ej["amplitude"] = normalized(e.amplitude);
        ej["alpha"] = normalized(e.alpha);
        ej["excess_into_base"] = normalized(e.excess_into_base);
        ej["excess_base_into_k"] = normalized(e.excess_base_into_k);
        ej["alpha_gap"] = normalized(std::abs(e.alpha - rep.base_alpha));
        entries.push_back(ej);
    }
    j["entries"] = entries;
    emit(manifest, dir, "report.json", j.dump(2) + "\n");

    std::string csv = "k,amplitude,alpha,alpha_gap,excess_into_base,excess_base_into_k\n";
    for (std::size_t k = 0; k < rep.entries.size(); ++k) {
        const auto& e = rep.entries[k];
        csv += std::to_string(e.k) + "," + fmt_double(e.amplitude) + "," +
               fmt_double(e.alpha) + "," + fmt_double(alpha.rows[k].gap) + "," +
               fmt_double(e.excess_into_base) + "," + fmt_double(e.excess_base_into_k) +
               "\n";
    }
    emit(manifest, dir, "per_k.csv", csv);

    // overlay of Aubry samples: base in black, runs on a color wheel
    SvgScatter svg;
    std::vector<std::pair<double, double>> base_pts;
    for (const auto& s : rep.base_aubry_lifts)
        base_pts.push_back({cfg.grid.cell_center(s.cell)[0],
                            wrap_unit(s.t_idx * cfg.grid.dt())});
    svg.add_group("black", base_pts);
    const char* colors[] = {"#c0392b", "#d35400", "#f39c12", "#27ae60",
                            "#16a085", "#2980b9", "#8e44ad", "#2c3e50"};
    for (std::size_t k = 0; k < rep.entries.size(); ++k) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& s : rep.entries[k].aubry_lifts)
            pts.push_back({cfg.grid.cell_center(s.cell)[0],
                           wrap_unit(s.t_idx * cfg.grid.dt())});
        svg.add_group(colors[k % 8], pts);
    }
    emit(manifest, dir, "aubry_overlay.svg", svg.render());
}

inline void run_cohomology(const ScenarioConfig& cfg, RunManifest& manifest,
                           const std::filesystem::path& dir, StageClock& clock) {
    CohomologySweep sweep = clock.time("cohomology", [&] {
        return cohomology_sweep(cfg.spec, cfg.grid, cfg.c_values, cfg.params);
    });
    std::string csv = "c,alpha,mean_rotation,usc_excess_to_prev,aubry_count\n";
    ordered_json entries = ordered_json::array();
    for (const auto& e : sweep.entries) {
        csv += fmt_double(e.c[0]) + "," + fmt_double(e.alpha) + "," +
               fmt_double(e.mean_rotation[0]) + "," + fmt_double(e.usc_excess_to_prev) +
               "," + std::to_string(e.aubry_lifts.size()) + "\n";
        ordered_json ej;
        ej["c"] = normalized(e.c[0]);
        if (cfg.grid.dim == 2) ej["c2"] = normalized(e.c[1]);
        ej["alpha"] = normalized(e.alpha);
        ej["mean_rotation"] = normalized(e.mean_rotation[0]);
        ej["usc_excess_to_prev"] = normalized(e.usc_excess_to_prev);
        entries.push_back(ej);
    }
    ordered_json j;
    j["entries"] = entries;
    emit(manifest, dir, "sweep.json", j.dump(2) + "\n");
    emit(manifest, dir, "sweep.csv", csv);

    // alpha(c) curve, rescaled into the unit box
    double cmin = kInf, cmax = -kInf, amin = kInf, amax = -kInf;
    for (const auto& e : sweep.entries) {
        cmin = std::min(cmin, e.c[0]);
        cmax = std::max(cmax, e.c[0]);
        amin = std::min(amin, e.alpha);
        amax = std::max(amax, e.alpha);
    }
    double cspan = cmax > cmin ? cmax - cmin : 1.0;
    double aspan = amax > amin ? amax - amin : 1.0;
    SvgScatter svg;
    std::vector<std::pair<double, double>> pts;
    for (const auto& e : sweep.entries)
        pts.push_back({(e.c[0] - cmin) / cspan, (e.alpha - amin) / aspan});
    svg.add_group("#2980b9", pts);
    emit(manifest, dir, "alpha_curve.svg", svg.render());
}

} // namespace rundetail

/// Executes the configured pipeline and writes its outputs atomically under
/// the configured directory. Identical config and version produce
/// byte-identical data files; wall-clock timings live only in manifest.json.
inline RunManifest run_scenario(const ScenarioConfig& cfg) {
    RunManifest manifest;
    manifest.config_hash = fnv1a_hex(cfg.raw_text);
    rundetail::StageClock clock(manifest);
    std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);

    std::string stage_error;
    try {
        switch (cfg.kind) {
            case ExperimentKind::Solve:
                rundetail::run_solve(cfg, manifest, dir, clock);
                break;
            case ExperimentKind::Barrier:
                rundetail::run_barrier(cfg, manifest, dir, clock);
                break;
            case ExperimentKind::Coincidence:
                rundetail::run_coincidence(cfg, manifest, dir, clock);
                break;
            case ExperimentKind::Semicontinuity:
                rundetail::run_semicontinuity_scenario(cfg, manifest, dir, clock);
                break;
            case ExperimentKind::Cohomology:
                rundetail::run_cohomology(cfg, manifest, dir, clock);
                break;
        }
    } catch (const std::exception& e) {
        stage_error = e.what();
    }

    // the manifest records the run even when a stage failed, with whatever
    // outputs were completed before the failure
    ordered_json mj;
    mj["config_hash"] = manifest.config_hash;
    mj["version"] = manifest.version;
    mj["name"] = cfg.name;
    if (!stage_error.empty()) mj["error"] = stage_error;
    ordered_json stages = ordered_json::array();
    for (const auto& [name, secs] : manifest.stage_seconds) {
        ordered_json s;
        s["stage"] = name;
        s["seconds"] = secs;
        stages.push_back(s);
    }
    mj["stages"] = stages;
    mj["files"] = manifest.files;
    atomic_write(dir / "manifest.json", mj.dump(2) + "\n");
    if (!stage_error.empty()) throw Error("stage failed: " + stage_error);
    return manifest;
}

} // namespace matherkit
