// Command-line front end: amp <experiment> --config FILE [--seed N] [--out DIR]
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amp/experiments.hpp"

namespace {

constexpr int kConfigError = 4;

int run(const std::string& name, const std::string& config_path, std::optional<std::uint64_t> seed, bool quick,
        const std::string& out_dir) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config file " << config_path << "\n";
            return kConfigError;
        }
        try {
            cfg = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            std::cerr << "error: config file " << config_path << " is not valid JSON: " << e.what() << "\n";
            return kConfigError;
        }
    }
    if (quick) cfg["quick"] = true;
    const amp::ExperimentReport rep = amp::run_experiment(name, cfg, seed);
    const std::string dir = out_dir.empty() ? "results/" + rep.experiment : out_dir;
    try {
        amp::write_report(rep, dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    if (rep.summary.contains("error"))
        std::cerr << "error (" << rep.summary["error"]["kind"].get<std::string>()
                  << "): " << rep.summary["error"]["message"].get<std::string>() << "\n";
    std::cout << rep.experiment << ": " << (rep.exit_code == 0 ? "pass" : "fail") << " (exit " << rep.exit_code
              << "), wrote " << dir << "/report.json and " << dir << "/metrics.csv\n";
    return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate message passing experiments"};
    app.require_subcommand(1);
    std::string config, out;
    std::optional<std::uint64_t> seed;
    bool quick = false;

    for (const std::string& name : amp::experiment_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config, "JSON configuration file (defaults apply to omitted keys)");
        sub->add_option("--seed", seed, "master seed, overrides the config");
        sub->add_option("--out", out, "output directory (default results/<experiment>)");
        sub->add_flag("--quick", quick, "apply the config's quick_overrides (small smoke-test sizes)");
        sub->callback([&, name] { std::exit(run(name, config, seed, quick, out)); });
    }
    CLI::App* defaults = app.add_subcommand("default-config", "print the default configuration of an experiment");
    std::string which;
    defaults->add_option("experiment", which, "experiment name")->required();
    defaults->callback([&] {
        try {
            std::cout << amp::default_config(which).dump(2) << "\n";
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            std::exit(kConfigError);
        }
    });
    app.add_subcommand("list", "list experiments")->callback([] {
        for (const auto& n : amp::experiment_names()) std::cout << n << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    return 0;
}
