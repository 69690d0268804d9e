// crest — constrained resilient estimation toolkit.
//
// Subcommands:
//   simulate    generate a trajectory from the configured model
//   estimate    run the estimator over a trajectory file
//   detect      run the chi-squared attack detector over a step-output file
//   montecarlo  multi-seed stability study with a structured report
//   compare     constrained vs. unconstrained estimation on one trajectory
//
// Exit codes: 0 success, 2 usage/config error, 3 numerical failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crest/commands.hpp"
#include "crest/config.hpp"
#include "crest/errors.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    crest::ConfigOverrides overrides;
    std::string traj_path;   // estimate (required), compare (optional)
    std::string steps_path;  // detect (required)
};

// Loads the config file when given, then layers the CLI overrides on top.
crest::ExperimentConfig make_config(const CliArgs& args) {
    crest::ExperimentConfig config;
    if (!args.config_path.empty()) config = crest::load_config(args.config_path);
    crest::apply_overrides(config, args.overrides);
    crest::validate_config(config);
    return config;
}

void add_common_flags(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "Experiment config file (JSON)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.overrides.seed, "Simulation seed (overrides config)");
    cmd->add_option("--horizon", args.overrides.horizon, "Number of steps (overrides config)");
    cmd->add_option("--alpha", args.overrides.alpha, "Detector false-alarm rate in (0,1)");
    cmd->add_flag("--no-attack-constraints", args.overrides.no_attack_constraints,
                  "Disable the attack-block constraints");
    cmd->add_flag("--no-state-constraints", args.overrides.no_state_constraints,
                  "Disable the state-block constraints");
    cmd->add_option("--out", args.overrides.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crest: resilient input-and-state estimation under constraints"};
    app.require_subcommand(1);

    CliArgs args;

    CLI::App* simulate = app.add_subcommand("simulate", "Generate a trajectory CSV");
    add_common_flags(simulate, args);

    CLI::App* estimate = app.add_subcommand("estimate", "Estimate over a trajectory file");
    add_common_flags(estimate, args);
    estimate->add_option("trajectory", args.traj_path, "Trajectory CSV to estimate over")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* detect = app.add_subcommand("detect", "Detect attacks from a step-output file");
    add_common_flags(detect, args);
    detect->add_option("steps", args.steps_path, "Step-output CSV from `estimate`")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* montecarlo = app.add_subcommand("montecarlo", "Multi-seed stability study");
    add_common_flags(montecarlo, args);

    CLI::App* compare =
        app.add_subcommand("compare", "Constrained vs. unconstrained side-by-side");
    add_common_flags(compare, args);
    compare->add_option("trajectory", args.traj_path,
                        "Trajectory CSV (simulated from config when omitted)")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version land here with success codes.
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*detect) {
            // `detect` replays a step log; only alpha and the output dir apply.
            double alpha = 0.05;
            std::string out_dir = "out";
            if (!args.config_path.empty()) {
                const crest::ExperimentConfig config = make_config(args);
                alpha = config.alpha;
                out_dir = config.out;
            } else {
                if (args.overrides.alpha) alpha = *args.overrides.alpha;
                if (args.overrides.out) out_dir = *args.overrides.out;
                if (alpha <= 0.0 || alpha >= 1.0)
                    throw crest::ConfigError("alpha must lie in (0,1)");
            }
            return crest::cli::cmd_detect(args.steps_path, alpha, out_dir);
        }

        const crest::ExperimentConfig config = make_config(args);
        if (*simulate) return crest::cli::cmd_simulate(config);
        if (*estimate) return crest::cli::cmd_estimate(config, args.traj_path);
        if (*montecarlo) return crest::cli::cmd_montecarlo(config);
        if (*compare) return crest::cli::cmd_compare(config, args.traj_path);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const crest::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const crest::ArgumentError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const crest::StructuralError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return 2;
    } catch (const crest::Error& e) {
        // Singularity, infeasibility, convergence, and numerical failures.
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
