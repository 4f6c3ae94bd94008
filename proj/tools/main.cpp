#include "config.hpp"
#include "run.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace sidekit::cli;

int main(int argc, char** argv)
{
    CLI::App app{"sidekit: stability analysis and simulation of stochastic impulsive systems"};
    app.require_subcommand(0, 1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::uint64_t trajectories = 0;
    std::string out_dir;
    bool dump = false;
    app.add_option("--config", config_path, "Run configuration file")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Noise seed (overrides [numeric] seed)");
    auto* traj_opt =
        app.add_option("--trajectories", trajectories, "Ensemble size (overrides [numeric] trajectories)")
            ->check(CLI::PositiveNumber);
    auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    app.add_flag("--dump-config", dump, "Print the effective configuration and exit");

    Overrides overrides;
    const std::pair<const char*, Task> commands[] = {
        {"simulate", Task::Simulate},       {"analyze", Task::Analyze},
        {"max-stepsize", Task::MaxStepsize}, {"exponent", Task::Exponent},
        {"converge", Task::Converge},       {"cps-demo", Task::CpsDemo},
    };
    const char* help[] = {
        "Simulate the coupled physical/cyber trajectory",
        "Certify mean-square stability with the Lyapunov inequality",
        "Largest stepsize certified by the numerical Lyapunov inequality",
        "Estimate moment and almost-sure exponents by Monte Carlo",
        "Strong convergence order study on nested grids",
        "Scalar cyber-physical controller demo",
    };
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        const Task task = commands[i].second;
        app.add_subcommand(commands[i].first, help[i])->callback([&overrides, task] {
            overrides.task = task;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalid;
    }

    if (*seed_opt) {
        overrides.seed = seed;
    }
    if (*traj_opt) {
        overrides.trajectories = trajectories;
    }
    if (*out_opt) {
        overrides.out = out_dir;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = load_config(config_path);
        }
        cfg = apply(std::move(cfg), overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitInvalid;
    }

    if (dump) {
        std::cout << dump_config(cfg);
        return kExitOk;
    }
    return run_guarded(cfg, std::cout, std::cerr);
}
