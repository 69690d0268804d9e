#pragma once

#include <string>
#include <vector>

#include "crest/config.hpp"
#include "crest/io.hpp"

namespace crest::cli {

// One full estimation pass over a trajectory: per-step estimator internals
// plus the derived metrics (the truth is taken from the trajectory).
struct RunResult {
    std::vector<StepOutput> steps;       // steps k = 1 .. traj.steps()-1
    std::vector<io::MetricsRow> metrics; // aligned with `steps`
};

// Runs the estimator over the trajectory with the bundle's constraints.
// The decision statistic in the metrics uses the unconstrained attack
// estimate with its covariance (see the detector notes in the README).
RunResult run_estimation(const ModelBundle& bundle,
                         const ExperimentConfig& config,
                         const scenario::Trajectory& traj);

// Aggregated Monte-Carlo stability report.
struct StabilityReport {
    int runs = 0;
    int steps = 0;
    std::vector<double> mse_x;  // mean ||x - x_hat||^2 per step index
    std::vector<double> mse_d;  // mean ||d - d_hat||^2 per step index
    double mse_x_initial = 0.0;
    double fit_a = 0.0;         // dominating bound a e^{-b k} mse_x_initial + c
    double fit_b = 0.0;
    double fit_c = 0.0;
    bool fit_dominates = false;
    double window_max = 0.0;    // windowed steady-state MSE statistics
    double window_median = 0.0;
    double window_ratio = 0.0;
    double p_xu_eig_min = 0.0;  // extreme posterior covariance eigenvalues
    double p_xu_eig_max = 0.0;
    double gramian_min_eig = 0.0;  // sliding-window observability diagnostic
    int divergent_runs = 0;

    std::string text() const;  // deterministic key: value rendering
};

StabilityReport run_montecarlo(const ExperimentConfig& config);

// Subcommand entry points; return the process exit code (0 on success).
int cmd_simulate(const ExperimentConfig& config);
int cmd_estimate(const ExperimentConfig& config, const std::string& traj_path);
int cmd_detect(const std::string& steps_path, double alpha,
               const std::string& out_dir);
int cmd_montecarlo(const ExperimentConfig& config);
int cmd_compare(const ExperimentConfig& config, const std::string& traj_path);

}  // namespace crest::cli
