#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cocycle_forge/parallel.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace cocycle_forge;
    CLI::App app{"Lyapunov exponents and perturbations of SL(2,R) cocycles"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    for (const char* name : {"le", "dichotomy", "perturb", "castle", "demo-discontinuity"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "flat JSON config")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--threads", threads, "worker threads (else COCYCLE_FORGE_THREADS, else 1)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    cli::ExperimentConfig config;
    try {
        config = cli::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kConfigError;
    }
    if (seed) {
        config.seed = *seed;
        config.seed_given = true;
    }
    cli::RunOptions opt;
    opt.out_dir = out_dir;
    try {
        opt.threads = resolve_threads(threads);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kConfigError;
    }
    return cli::run_command(command, config, opt, std::cerr);
}
