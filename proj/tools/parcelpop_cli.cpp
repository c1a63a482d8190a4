// Command-line front end. Exit codes: 0 ok, 1 input error, 2 internal error.

#include "parcelpop/error.hpp"
#include "parcelpop/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace parcelpop;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out_dir = "out";
};

Config load(const Globals& g) {
    if (g.config.empty()) throw InputError("--config is required");
    Config cfg = load_config(g.config);
    if (g.seed) {
        cfg.seed = *g.seed;
        cfg.ca.seed = *g.seed;
    }
    if (g.threads) {
        cfg.threads = std::max(1u, *g.threads);
        cfg.ca.threads = cfg.threads;
        cfg.synthesis.threads = cfg.threads;
    }
    return cfg;
}

void print_stage(const StageResult& r) {
    std::cout << r.name << ": " << r.summary.dump() << '\n';
    for (const auto& f : r.outputs) std::cout << "  wrote " << f << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parcel-level population spatialization and synthesis"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config, "JSON run configuration");
    app.add_option("--seed", g.seed, "Override the random seed");
    app.add_option("--threads", g.threads, "Worker threads");
    app.add_option("--out-dir", g.out_dir, "Directory for stage outputs")->capture_default_str();

    for (const auto& name : kStages) {
        if (name == "ca") continue;
        app.add_subcommand(name, "Run the " + name + " stage");
    }
    auto* ca = app.add_subcommand("ca", "Run the cellular automaton");
    std::optional<double> budget;
    std::string params_path;
    ca->add_option("--budget", budget, "Urban area budget in m²");
    ca->add_option("--params", params_path, "JSON object of CA parameters overriding the config");
    ca->add_subcommand("run", "Same as ca")->fallthrough();
    app.add_subcommand("run", "Run every stage and write manifest.json");
    auto* em = app.add_subcommand("emit-map", "Write symbology-ready GeoJSON for a stage output");
    std::string map_stage, map_path;
    em->add_option("stage", map_stage, "parcels, features, ca, allocation or agents")->required();
    em->add_option("path", map_path, "Output GeoJSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        auto* sub = app.get_subcommands().front();
        const std::string cmd = sub->get_name();
        if (cmd == "emit-map") {
            for (const auto& f : emit_map(map_stage, g.out_dir, map_path)) std::cout << "wrote " << f << '\n';
            return 0;
        }
        Config cfg = load(g);
        if (cmd == "run") {
            const auto res = run_pipeline(cfg, g.out_dir);
            for (const auto& r : res.stages) print_stage(r);
            std::cout << "manifest digest " << res.manifest["digest"].get<std::string>() << '\n';
            return 0;
        }
        if (cmd == "ca") {
            if (budget) cfg.ca_budget = *budget;
            if (!params_path.empty()) {
                nlohmann::json patch = cfg.raw;
                std::ifstream in(params_path);
                if (!in) throw InputError("cannot open '" + params_path + "'");
                nlohmann::json p;
                try {
                    p = nlohmann::json::parse(in);
                } catch (const nlohmann::json::parse_error& e) {
                    throw InputError("'" + params_path + "' is not valid JSON: " + e.what());
                }
                patch["ca"].update(p);
                const auto seed = cfg.seed;
                const auto ca_seed = cfg.ca.seed;
                const auto threads = cfg.threads;
                const auto b = cfg.ca_budget;
                cfg = parse_config(patch, cfg.base_dir);
                cfg.seed = seed;
                if (!p.contains("seed")) cfg.ca.seed = ca_seed;
                cfg.threads = cfg.ca.threads = cfg.synthesis.threads = threads;
                if (!p.contains("area_budget")) cfg.ca_budget = b;
            }
        }
        print_stage(run_stage(cfg, cmd, g.out_dir));
        return 0;
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.input_error() ? 1 : 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
