#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sys/wait.h>

#include "fharm/error.hpp"
#include "fharm/experiment.hpp"

using namespace fharm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "fharm_experiment" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::string error_of(const std::string& text) {
    try {
        validate_config(parse_config(text));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* const kSmall = R"({
  "grid": {"dims": 32, "spacing": 0.06451612903225806},
  "initial": {"kind": "hedgehog", "perturb": 0.1},
  "model": {"B": 5.0},
  "solve": {"max_iters": 30},
  "analysis": {"r_min": 0.26, "r_max": 0.6, "radii_count": 8, "flux_dirs": 64},
  "strata": {"r0": 0.26, "beta_radii": [0.26], "detect_r_max": 0.6, "detect_radii": 2,
             "lattice": 2, "minkowski_radii": [0.2, 0.4], "s_max": 0.3, "k": 0},
  "stages": ["solve", "analyze", "stratify", "beta", "cover", "verify"]
})";

ExperimentConfig small(const fs::path& out) {
    auto cfg = parse_config(kSmall);
    cfg.output_dir = out.string();
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FHARM_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config errors carry the field path") {
    CHECK(error_of(R"({"grid": {"spacing": -0.1}})").find("/grid/spacing") == 0);
    CHECK(error_of(R"({"grid": {"colour": 1}})") == "/grid/colour: unknown key");
    CHECK(error_of(R"({"model": {"beta": "half"}})").find("/model/beta") == 0);
    CHECK(error_of(R"({"strata": {"r0": 0.01}})").find("/strata/r0") == 0);
    CHECK(error_of(R"({"stages": ["solve", "dance"]})").find("/stages") == 0);
    const std::string parse = error_of("{\n  \"seed\": 3,\n  oops\n}");
    CHECK(parse.find("parse error") == 0);
    CHECK(parse.find("line 3") != std::string::npos);
    CHECK(error_of("// comments are allowed\n{\"seed\": 3}") == "");
    CHECK_THROWS_AS(preset_config("no-such-preset"), ConfigError);
}

TEST_CASE("config serialization round trips") {
    for (const auto& name : preset_names()) {
        const auto cfg = preset_config(name);
        CHECK_NOTHROW(validate_config(cfg));
        const auto back = parse_config(config_to_json(cfg));
        CHECK(config_to_json(back) == config_to_json(cfg));
        CHECK(config_hash(back) == config_hash(cfg));
    }
    auto a = parse_config("{}"), b = a;
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a) == config_hash(parse_config("{\"seed\": 1}")));
}

TEST_CASE("runs are deterministic") {
    const auto d1 = scratch("det1"), d2 = scratch("det2");
    auto c1 = small(d1), c2 = small(d1);
    Experiment(c1).run();
    fs::rename(d1, d2);
    Experiment(c2).run();
    int compared = 0;
    for (const auto& e : fs::directory_iterator(d1)) {
        const auto other = d2 / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
        ++compared;
    }
    CHECK(compared >= 18);
    const std::string manifest = slurp(d1 / "manifest.json");
    CHECK(manifest.find("\"version\"") != std::string::npos);
    CHECK(manifest.find("\"config_hash\"") != std::string::npos);
}

TEST_CASE("stages run in isolation from a saved map") {
    const auto d1 = scratch("iso1"), d2 = scratch("iso2");
    auto c1 = small(d1);
    Experiment full(c1);
    full.solve_stage();
    full.analyze_stage();
    auto c2 = small(d2);
    c2.solve.enabled = false;
    Experiment alone(c2);
    alone.set_map(load_map(d1 / "map.fhm", 3));
    alone.analyze_stage();
    CHECK(slurp(d1 / "profiles.csv") == slurp(d2 / "profiles.csv"));
    CHECK(slurp(d1 / "monotonicity.json") == slurp(d2 / "monotonicity.json"));
    auto wrong = GridDomain::ball(3, 24, 1.0);
    CHECK_THROWS_AS(alone.set_map(hedgehog_map(wrong)), DimensionError);
}

TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    const auto good = dir / "good.json", bad = dir / "bad.json", broken = dir / "broken.json";
    std::ofstream(good) << kSmall;
    std::ofstream(bad) << R"({"grid": {"spacing": -1}})";
    std::ofstream(broken) << "{ \"seed\": ";
    CHECK(run_cli("list-presets") == 0);
    CHECK(run_cli("show-config --preset cylinder") == 0);
    CHECK(run_cli("show-config --config " + bad.string()) == 2);
    CHECK(run_cli("show-config --config " + broken.string()) == 2);
    CHECK(run_cli("analyze --config " + good.string() + " --map " + (dir / "missing.fhm").string()) == 1);
    CHECK(run_cli("solve --config " + good.string() + " --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "map.fhm"));
    CHECK(run_cli("analyze --config " + good.string() + " --map " + (dir / "out" / "map.fhm").string() + " --out " +
                  (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "profiles.csv"));
}
