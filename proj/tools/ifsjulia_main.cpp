#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ifsjulia/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"IFS attractors as Julia sets: attractor rendering, semigroup and uqr "
                 "construction, verification"};

    std::string config_path;
    std::string command, ifs_path, out_dir;
    std::uint64_t seed = 0;
    std::size_t resolution = 0;
    bool have_seed = false, have_res = false;

    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--command", command,
                   "attractor | semigroup | uqr | verify | report (overrides config)");
    app.add_option("--ifs", ifs_path, "IFS definition file (overrides config)");
    app.add_option("--seed", seed, "RNG seed (overrides config)")->each([&](const std::string&) {
        have_seed = true;
    });
    app.add_option("--res", resolution, "grid resolution (overrides config)")
        ->each([&](const std::string&) { have_res = true; });
    app.add_option("--out", out_dir, "output directory (overrides config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ifsjulia::exit_code::validation_failure;
    }

    ifsjulia::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = ifsjulia::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ifsjulia::exit_code::validation_failure;
    }
    if (!command.empty()) cfg.command = command;
    if (!ifs_path.empty()) cfg.ifs_path = ifs_path;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (have_seed) cfg.seed = seed;
    if (have_res) cfg.resolution = resolution;
    if (cfg.command.empty()) {
        std::cerr << "error: no command (use --command or a config file)\n";
        return ifsjulia::exit_code::validation_failure;
    }
    return ifsjulia::run(cfg, std::cout);
}
