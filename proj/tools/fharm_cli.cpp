#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "fharm/error.hpp"
#include "fharm/experiment.hpp"
#include "fharm/parallel.hpp"

namespace {

struct Options {
    std::string config;
    std::string preset;
    std::string map;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
};

fharm::ExperimentConfig resolve(const Options& o) {
    if (!o.config.empty() && !o.preset.empty()) throw fharm::ConfigError("give either --config or --preset, not both");
    fharm::ExperimentConfig cfg;
    if (!o.config.empty())
        cfg = fharm::load_config(o.config);
    else if (!o.preset.empty())
        cfg = fharm::preset_config(o.preset);
    else
        throw fharm::ConfigError("one of --config or --preset is required");
    if (o.seed_given) cfg.seed = o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    fharm::validate_config(cfg);
    return cfg;
}

void add_common(CLI::App* sub, Options& o, bool with_map) {
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--preset", o.preset, "named preset (see list-presets)");
    if (with_map) sub->add_option("--map", o.map, "map file to analyse instead of the initial map");
    sub->add_option("--seed", o.seed, "override the config seed")->each([&o](const std::string&) { o.seed_given = true; });
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stratification experiments for energy-minimizing sphere-valued maps"};
    app.set_version_flag("--version", fharm::kVersion);
    app.require_subcommand(1);
    Options o;

    struct Cmd {
        const char* name;
        const char* help;
        bool with_map;
    };
    const Cmd cmds[] = {
        {"solve", "minimize the energy from the initial map and save map.fhm", false},
        {"analyze", "density profiles and monotonicity check", true},
        {"stratify", "singular set detection, symmetry defects and strata", true},
        {"beta", "Jones beta numbers, Reifenberg sums and the L2 estimate", true},
        {"cover", "covering refinement and Minkowski content", true},
        {"verify-integrand", "check the structural assumptions of the integrand", false},
        {"run", "all stages listed in the config", false},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        auto* s = app.add_subcommand(c.name, c.help);
        add_common(s, o, c.with_map);
        subs.push_back(s);
    }
    auto* list = app.add_subcommand("list-presets", "print the preset names");
    auto* show = app.add_subcommand("show-config", "print the resolved config as JSON");
    add_common(show, o, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        fharm::set_thread_count(o.threads);
        if (list->parsed()) {
            for (const auto& n : fharm::preset_names()) std::cout << n << '\n';
            return 0;
        }
        const fharm::ExperimentConfig cfg = resolve(o);
        if (show->parsed()) {
            std::cout << fharm::config_to_json(cfg) << '\n';
            return 0;
        }
        fharm::Experiment exp(cfg);
        if (!o.map.empty()) exp.set_map(fharm::load_map(o.map, cfg.grid.n));
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "run") {
            exp.run();
            std::cout << "wrote " << cfg.output_dir << '\n';
            return 0;
        }
        if (cmd == "solve") {
            const auto rep = exp.solve_stage();
            std::printf("iterations %d converged %d energy %.10g\n", rep.iterations, int(rep.converged),
                        rep.energy_history.empty() ? 0.0 : rep.energy_history.back());
        } else if (cmd == "analyze") {
            const auto rep = exp.analyze_stage();
            std::printf("profiles %zu violations %zu flux deficits %zu\n", rep.profiles.size(), rep.violations.size(),
                        rep.flux_deficits.size());
        } else if (cmd == "stratify") {
            exp.stratify_stage();
            std::printf("flagged %zu singular %zu\n", exp.detection().flagged.size(), exp.detection().singular.size());
        } else if (cmd == "beta") {
            exp.beta_stage();
        } else if (cmd == "cover") {
            exp.cover_stage();
        } else if (cmd == "verify-integrand") {
            const auto rep = exp.verify_stage();
            std::printf("assumptions %s\n", rep.all_passed() ? "hold" : "fail");
            exp.write_manifest();
            return rep.all_passed() ? 0 : 1;
        }
        exp.write_manifest();
        return 0;
    } catch (const fharm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
