#pragma once

#include <string>
#include <vector>

#include "crest/filter.hpp"
#include "crest/scenario.hpp"

// CSV input/output. All files carry a header row; floating-point values are
// rendered with 17 significant digits, which round-trips IEEE doubles
// exactly, so re-reading a file reproduces the original values bit for bit.

namespace crest::io {

// %.17g rendering used for every floating-point cell.
std::string fmt_double(double value);

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

Csv read_csv(const std::string& path);
void write_csv(const std::string& path, const Csv& csv);

// Trajectory rows: k, x*, u*, d*, y*, w*, v* (one row per step).
void write_trajectory(const std::string& path, const scenario::Trajectory& traj);
scenario::Trajectory read_trajectory(const std::string& path);

// Full per-step estimator log. Vector cells are name_i, matrix cells are
// name_i_j in row-major order; active sets serialize as ;-joined indices.
void write_steps(const std::string& path, const std::vector<StepOutput>& steps);
std::vector<StepOutput> read_steps(const std::string& path);

// One metrics row per estimation step.
struct MetricsRow {
    int k = 0;
    double err_x = 0.0;       // ||x_k - x_hat_{k|k}||
    double err_x_u = 0.0;     // ||x_k - x_hat_u_{k|k}||
    double err_d = 0.0;       // ||d_{k-1} - d_hat_{k-1}||
    double err_d_u = 0.0;     // ||d_{k-1} - d_hat_u_{k-1}||
    double trace_P_x = 0.0;
    double trace_P_xu = 0.0;
    double trace_P_d = 0.0;
    double trace_P_du = 0.0;
    double chi2_stat = 0.0;   // decision statistic (see detector docs)
    bool attacked = false;
    int active_d = 0;         // active attack-constraint row count
    int active_x = 0;         // active state-constraint row count
};

void write_metrics(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics(const std::string& path);

}  // namespace crest::io
