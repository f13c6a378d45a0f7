#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "matherkit/matherkit.hpp"

using namespace matherkit;

namespace {

const char* kMinimalSolve = R"(
name = pendulum_mini
output_dir = runs/pendulum_mini
spec {
  potential { family = cosine }
}
grid { n_q = 64  n_t = 8  v_max = 2.5 }
experiment { kind = solve }
)";

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("minimal config parses with defaults", "[config]") {
    ScenarioConfig cfg = parse_config_text(kMinimalSolve);
    CHECK(cfg.name == "pendulum_mini");
    CHECK(cfg.kind == ExperimentKind::Solve);
    CHECK(cfg.grid.n_q == 64);
    CHECK(cfg.spec.dim == 1);
    CHECK(cfg.spec.kinetic[0] == 1.0);
    CHECK(cfg.params.tol_fix == 1e-12); // defaults filled
    CHECK(cfg.params.eps_schedule.size() == 4);
}

TEST_CASE("config validation failures", "[config]") {
    SECTION("increasing eps schedule") {
        std::string text = R"(
spec { potential { family = zero } }
grid { n_q = 32  n_t = 8  v_max = 1.0 }
tolerances { eps_schedule = 0.1, 0.2 }
experiment { kind = solve }
)";
        try {
            parse_config_text(text);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.field == "tolerances.eps_schedule");
            CHECK(e.constraint.find("decreasing") != std::string::npos);
        }
    }
    SECTION("unknown potential family lists the known ones") {
        std::string text = R"(
spec { potential { family = foo } }
grid { n_q = 32  n_t = 8  v_max = 1.0 }
experiment { kind = solve }
)";
        try {
            parse_config_text(text);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            CHECK(e.field == "spec.potential.family");
            CHECK(e.constraint.find("cosine") != std::string::npos);
            CHECK(e.constraint.find("double_well") != std::string::npos);
        }
    }
    SECTION("unknown keys are rejected") {
        std::string text = R"(
spec { potential { family = zero } }
grid { n_q = 32  n_t = 8  v_max = 1.0  bogus = 3 }
experiment { kind = solve }
)";
        CHECK_THROWS_AS(parse_config_text(text), ValidationError);
    }
    SECTION("syntax errors carry line numbers") {
        try {
            parse_config_text("spec {\n  nonsense line\n}\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
        }
    }
    SECTION("grid invariants are surfaced as validation errors") {
        std::string text = R"(
spec { potential { family = zero } }
grid { n_q = 32  n_t = 8  v_max = 9.0 }
experiment { kind = solve }
)";
        CHECK_THROWS_AS(parse_config_text(text), ValidationError);
    }
    SECTION("cohomology requires c values") {
        std::string text = R"(
spec { potential { family = cosine } }
grid { n_q = 32  n_t = 8  v_max = 1.0 }
experiment { kind = cohomology }
)";
        CHECK_THROWS_AS(parse_config_text(text), ValidationError);
    }
}

TEST_CASE("trig family terms", "[config]") {
    std::string text = R"(
spec {
  potential {
    family = trig
    term = 0.5, 0, 1, 0.0
    term = 0.25, 1, 2, 0.125
  }
}
grid { n_q = 32  n_t = 8  v_max = 1.0 }
experiment { kind = solve }
)";
    ScenarioConfig cfg = parse_config_text(text);
    REQUIRE(cfg.spec.potential.terms.size() == 2);
    CHECK(cfg.spec.potential.terms[1].time_harmonic == 1);
    CHECK(cfg.spec.potential.terms[1].wave[0] == 2);
    CHECK(cfg.spec.potential.terms[1].phase == 0.125);
}

TEST_CASE("solve scenario writes outputs and reruns byte-identically", "[config]") {
    std::string text = std::string(kMinimalSolve);
    ScenarioConfig cfg = parse_config_text(text);
    auto dir = std::filesystem::temp_directory_path() / "matherkit_cfg_test";
    std::filesystem::remove_all(dir);
    cfg.output_dir = (dir / "run").string();

    RunManifest first = run_scenario(cfg);
    REQUIRE(std::filesystem::exists(dir / "run" / "alpha.json"));
    REQUIRE(std::filesystem::exists(dir / "run" / "u.csv"));
    REQUIRE(std::filesystem::exists(dir / "run" / "manifest.json"));
    for (const auto& f : first.files)
        CHECK(std::filesystem::exists(dir / "run" / f));

    std::string alpha1 = read_file(dir / "run" / "alpha.json");
    std::string u1 = read_file(dir / "run" / "u.csv");
    RunManifest second = run_scenario(cfg);
    CHECK(read_file(dir / "run" / "alpha.json") == alpha1);
    CHECK(read_file(dir / "run" / "u.csv") == u1);
    CHECK(first.config_hash == second.config_hash);

    // no temp files linger
    for (const auto& entry : std::filesystem::directory_iterator(dir / "run"))
        CHECK(entry.path().extension() != ".tmp");
    std::filesystem::remove_all(dir);
}

TEST_CASE("a failing stage still records a manifest with partial outputs", "[config]") {
    // T_max too small for the pendulum barrier trips the window detector
    std::string text = R"(
name = broken_window
spec { potential { family = cosine } }
grid { n_q = 128  n_t = 8  v_max = 2.5 }
tolerances { T_min = 1  T_max = 2  tol_tail = 1e-9 }
experiment { kind = barrier }
)";
    ScenarioConfig cfg = parse_config_text(text);
    auto dir = std::filesystem::temp_directory_path() / "matherkit_cfg_fail";
    std::filesystem::remove_all(dir);
    cfg.output_dir = (dir / "out").string();
    CHECK_THROWS_AS(run_scenario(cfg), Error);
    REQUIRE(std::filesystem::exists(dir / "out" / "manifest.json"));
    auto manifest = ordered_json::parse(read_file(dir / "out" / "manifest.json"));
    CHECK(manifest.contains("error"));
    for (const auto& f : manifest["files"])
        CHECK(std::filesystem::exists(dir / "out" / f.get<std::string>()));
    std::filesystem::remove_all(dir);
}

TEST_CASE("barrier scenario emits table and decomposition", "[config]") {
    std::string text = R"(
name = dw_mini
spec {
  potential { family = double_well  amplitude = 0.05 }
}
grid { n_q = 128  n_t = 8  v_max = 0.8 }
tolerances {
  T_min = 8
  T_max = 32
  tol_aubry = 5e-3
  tol_class = 2.5e-2
  sample_count = 16
}
experiment { kind = barrier }
)";
    ScenarioConfig cfg = parse_config_text(text);
    auto dir = std::filesystem::temp_directory_path() / "matherkit_cfg_barrier";
    std::filesystem::remove_all(dir);
    cfg.output_dir = (dir / "out").string();
    run_scenario(cfg);

    auto aubry = ordered_json::parse(read_file(dir / "out" / "aubry.json"));
    CHECK(aubry["classes"].size() == 2);
    std::string csv = read_file(dir / "out" / "barrier.csv");
    CHECK(csv.rfind("src_idx,dst_idx,h\n", 0) == 0);
    std::filesystem::remove_all(dir);
}
