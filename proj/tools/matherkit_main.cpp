#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "matherkit/matherkit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitPipeline = 3;

int cmd_validate(const std::string& path) {
    try {
        matherkit::ScenarioConfig cfg = matherkit::parse_config(path);
        std::printf("ok: %s (experiment '%s', grid %dx%d)\n", cfg.name.c_str(),
                    matherkit::experiment_kinds()[int(cfg.kind)].first.c_str(),
                    cfg.grid.n_q, cfg.grid.n_t);
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitValidation;
    }
}

int cmd_run(const std::string& path) {
    matherkit::ScenarioConfig cfg;
    try {
        cfg = matherkit::parse_config(path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitValidation;
    }
    try {
        matherkit::RunManifest manifest = matherkit::run_scenario(cfg);
        std::printf("wrote %zu files to %s\n", manifest.files.size() + 1,
                    cfg.output_dir.c_str());
        for (const auto& f : manifest.files) std::printf("  %s\n", f.c_str());
        std::printf("  manifest.json\n");
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pipeline failure: %s\n", e.what());
        return kExitPipeline;
    }
}

int cmd_list() {
    std::printf("experiment kinds:\n");
    std::printf("  solve           critical value and weak KAM solution\n");
    std::printf("  barrier         Peierls barrier table and Aubry decomposition\n");
    std::printf("  coincidence     variational vs chain relations, ladder, interpolation\n");
    std::printf("  semicontinuity  perturbation sequence with Hausdorff tracking\n");
    std::printf("  cohomology      one-form sweep of alpha and the Aubry set\n");
    std::printf("potential families:");
    for (const auto& f : matherkit::potential_families()) std::printf(" %s", f.c_str());
    std::printf("\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"matherkit: weak KAM and Aubry-Mather computations on the torus"};
    app.require_subcommand(1);

    std::string run_path, validate_path;
    CLI::App* run = app.add_subcommand("run", "execute a scenario config");
    run->add_option("config", run_path, "scenario config file")->required();
    CLI::App* validate = app.add_subcommand("validate", "parse and validate a config");
    validate->add_option("config", validate_path, "scenario config file")->required();
    app.add_subcommand("list-scenarios", "list experiment kinds and potential families");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    if (run->parsed()) return cmd_run(run_path);
    if (validate->parsed()) return cmd_validate(validate_path);
    return cmd_list();
}
