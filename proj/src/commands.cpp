#include "crest/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "crest/detector.hpp"
#include "crest/linalg.hpp"
#include "crest/projection.hpp"

namespace crest::cli {

namespace fs = std::filesystem;

namespace {

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory: " + out);
}

std::string out_path(const std::string& out, const std::string& name) {
    return (fs::path(out) / name).string();
}

// Per-run stability samples collected during Monte-Carlo.
struct RunDiagnostics {
    std::vector<double> se_x;  // squared state error per step
    std::vector<double> se_d;  // squared attack error per step
    double se_x_initial = 0.0;
    double p_xu_eig_min = std::numeric_limits<double>::infinity();
    double p_xu_eig_max = -std::numeric_limits<double>::infinity();
    double gramian_min_eig = std::numeric_limits<double>::infinity();
    bool divergent = false;
};

constexpr int kGramianWindow = 10;

RunDiagnostics diagnose_run(const ModelBundle& bundle,
                            const ExperimentConfig& config,
                            const scenario::Trajectory& traj) {
    RunDiagnostics diag;
    const RunResult run = run_estimation(bundle, config, traj);

    const FilterState init =
        initial_state(bundle.provider.at(0), traj.y[0], config.p0_scale);
    diag.se_x_initial = (traj.x[0] - init.x_hat).squaredNorm();

    std::vector<MatrixXd> transitions;  // transformed transition per step
    MatrixXd gamma_prev(bundle.provider.n(), 0);
    MatrixXd b_bar_prev(0, bundle.provider.n());

    for (std::size_t i = 0; i < run.steps.size(); ++i) {
        const int k = static_cast<int>(i) + 1;
        const StepOutput& s = run.steps[i];
        diag.se_x.push_back((traj.x[k] - s.x_hat).squaredNorm());
        diag.se_d.push_back((traj.d[k - 1] - s.d_hat).squaredNorm());
        if (!std::isfinite(diag.se_x.back()) || diag.se_x.back() > 1e12)
            diag.divergent = true;

        const VectorXd eig = eig_sym(s.P_xu).eigenvalues();
        diag.p_xu_eig_min = std::min(diag.p_xu_eig_min, eig(0));
        diag.p_xu_eig_max = std::max(diag.p_xu_eig_max, eig(eig.size() - 1));

        transitions.push_back(transformed_transition(
            bundle.provider.at(k - 1), bundle.provider.at(k), s.M, gamma_prev,
            b_bar_prev));

        // State-projection gain of this step feeds the next transition.
        const int n = bundle.provider.n();
        const int r = static_cast<int>(s.active_x.size());
        if (r == 0) {
            gamma_prev = MatrixXd(n, 0);
            b_bar_prev = MatrixXd(0, n);
        } else {
            const ConstraintSet cs = bundle.constraints_at(s.x_pred,
                                                           traj.u[k - 1]);
            MatrixXd B_bar(r, n);
            for (int j = 0; j < r; ++j) B_bar.row(j) = cs.B_x.row(s.active_x[j]);
            b_bar_prev = B_bar;
            gamma_prev = gamma_matrix(s.P_xu, B_bar);
        }
    }

    // Sliding-window observability Gramian of the transformed error system.
    const int n = bundle.provider.n();
    const int total = static_cast<int>(transitions.size());
    for (int start = 0; start + kGramianWindow <= total; ++start) {
        MatrixXd gram = MatrixXd::Zero(n, n);
        MatrixXd phi = MatrixXd::Identity(n, n);
        for (int j = 0; j < kGramianWindow; ++j) {
            const MatrixXd& C = bundle.provider.at(start + 1 + j).C;
            const MatrixXd CPhi = C * phi;
            gram += CPhi.transpose() * CPhi;
            phi = transitions[start + j] * phi;
        }
        diag.gramian_min_eig =
            std::min(diag.gramian_min_eig, min_eig_sym(gram));
    }
    return diag;
}

// Dominating-fit parameters: c covers the steady-state plateau, a is fixed
// at 2, and b is the largest decay rate that keeps a e^{-b k} m0 + c above
// the whole curve. b > 0 means the transient is exponentially dominated.
void fit_envelope(const std::vector<double>& mse, double m0, double& a,
                  double& b, double& c, bool& dominates) {
    a = 2.0;
    const int total = static_cast<int>(mse.size());
    const int tail_start = std::min(200, total / 2);
    c = 0.0;
    for (int k = tail_start; k < total; ++k) c = std::max(c, mse[k]);
    c *= 1.05;

    const double am0 = a * std::max(m0, 1e-300);
    b = std::log(2.0);
    for (int k = 0; k < total; ++k) {
        const double r = mse[k] - c;
        if (r <= 0.0) continue;
        const double cap = std::log(am0 / r) / (k + 1);
        b = std::min(b, cap);
    }
    dominates = b > 0.0;
    if (dominates) {
        for (int k = 0; k < total; ++k) {
            if (mse[k] > am0 * std::exp(-b * (k + 1)) + c + 1e-12) {
                dominates = false;
                break;
            }
        }
    }
}

double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

RunResult run_estimation(const ModelBundle& bundle,
                         const ExperimentConfig& config,
                         const scenario::Trajectory& traj) {
    const ModelProvider& model = bundle.provider;
    if (traj.steps() < 2)
        throw ConfigError("trajectory must contain at least two steps");
    if (static_cast<int>(traj.x[0].size()) != model.n() ||
        static_cast<int>(traj.u[0].size()) != model.m() ||
        static_cast<int>(traj.y[0].size()) != model.l() ||
        static_cast<int>(traj.d[0].size()) != model.p())
        throw ConfigError("trajectory dimensions do not match the model");

    FilterOptions opts;
    opts.time_update_attack = config.time_update_attack;
    Filter filter(initial_state(model.at(0), traj.y[0], config.p0_scale), opts);

    RunResult out;
    out.steps.reserve(traj.steps() - 1);
    out.metrics.reserve(traj.steps() - 1);

    for (int k = 1; k < traj.steps(); ++k) {
        const SystemStep& prev = model.at(k - 1);
        const SystemStep& cur = model.at(k);
        const VectorXd& u = traj.u[k - 1];
        const VectorXd& y = traj.y[k];

        const VectorXd x_pred = prev.A * filter.state().x_hat + prev.B * u;
        const ConstraintSet cs = bundle.constraints_at(x_pred, u);
        StepOutput s = filter.step(prev, cur, u, y, cs);

        io::MetricsRow row;
        row.k = k;
        row.err_x = (traj.x[k] - s.x_hat).norm();
        row.err_x_u = (traj.x[k] - s.x_hat_u).norm();
        row.err_d = (traj.d[k - 1] - s.d_hat).norm();
        row.err_d_u = (traj.d[k - 1] - s.d_hat_u).norm();
        row.trace_P_x = s.P_x.trace();
        row.trace_P_xu = s.P_xu.trace();
        row.trace_P_d = s.P_d.trace();
        row.trace_P_du = s.P_du.trace();
        const DetectionResult det = detect(s.d_hat_u, s.P_du, config.alpha);
        row.chi2_stat = det.statistic;
        row.attacked = det.attacked;
        row.active_d = static_cast<int>(s.active_d.size());
        row.active_x = static_cast<int>(s.active_x.size());

        out.metrics.push_back(row);
        out.steps.push_back(std::move(s));
    }
    return out;
}

std::string StabilityReport::text() const {
    std::ostringstream os;
    os << "runs: " << runs << '\n';
    os << "steps_per_run: " << steps << '\n';
    os << "mse_x_initial: " << io::fmt_double(mse_x_initial) << '\n';
    os << "mse_x_first: " << io::fmt_double(mse_x.empty() ? 0.0 : mse_x.front())
       << '\n';
    os << "mse_x_final: " << io::fmt_double(mse_x.empty() ? 0.0 : mse_x.back())
       << '\n';
    os << "mse_d_final: " << io::fmt_double(mse_d.empty() ? 0.0 : mse_d.back())
       << '\n';
    os << "fit_a: " << io::fmt_double(fit_a) << '\n';
    os << "fit_b: " << io::fmt_double(fit_b) << '\n';
    os << "fit_c: " << io::fmt_double(fit_c) << '\n';
    os << "fit_dominates: " << (fit_dominates ? 1 : 0) << '\n';
    os << "window_max: " << io::fmt_double(window_max) << '\n';
    os << "window_median: " << io::fmt_double(window_median) << '\n';
    os << "window_ratio: " << io::fmt_double(window_ratio) << '\n';
    os << "p_xu_eig_min: " << io::fmt_double(p_xu_eig_min) << '\n';
    os << "p_xu_eig_max: " << io::fmt_double(p_xu_eig_max) << '\n';
    os << "gramian_min_eig: " << io::fmt_double(gramian_min_eig) << '\n';
    os << "divergent_runs: " << divergent_runs << '\n';
    return os.str();
}

StabilityReport run_montecarlo(const ExperimentConfig& config) {
    const std::vector<std::uint64_t> seeds = config.seed_list();
    const ModelBundle bundle = build_model(config);

    std::vector<RunDiagnostics> diags(seeds.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers =
        std::min<unsigned>(hw, static_cast<unsigned>(seeds.size()));

    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&](unsigned worker) {
        for (std::size_t i = worker; i < seeds.size(); i += workers) {
            try {
                const scenario::Trajectory traj = scenario::simulate(
                    bundle.provider, bundle.attack,
                    [&](int) { return VectorXd::Zero(bundle.provider.m()); },
                    bundle.x0, config.horizon, seeds[i]);
                diags[i] = diagnose_run(bundle, config, traj);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work, t);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    // Deterministic reduction in seed order.
    StabilityReport report;
    report.runs = static_cast<int>(seeds.size());
    report.steps = config.horizon - 1;
    report.mse_x.assign(report.steps, 0.0);
    report.mse_d.assign(report.steps, 0.0);
    report.p_xu_eig_min = std::numeric_limits<double>::infinity();
    report.p_xu_eig_max = -std::numeric_limits<double>::infinity();
    report.gramian_min_eig = std::numeric_limits<double>::infinity();
    for (const RunDiagnostics& d : diags) {
        for (int k = 0; k < report.steps; ++k) {
            report.mse_x[k] += d.se_x[k];
            report.mse_d[k] += d.se_d[k];
        }
        report.mse_x_initial += d.se_x_initial;
        report.p_xu_eig_min = std::min(report.p_xu_eig_min, d.p_xu_eig_min);
        report.p_xu_eig_max = std::max(report.p_xu_eig_max, d.p_xu_eig_max);
        report.gramian_min_eig =
            std::min(report.gramian_min_eig, d.gramian_min_eig);
        if (d.divergent) ++report.divergent_runs;
    }
    const double inv = 1.0 / report.runs;
    for (double& v : report.mse_x) v *= inv;
    for (double& v : report.mse_d) v *= inv;
    report.mse_x_initial *= inv;

    fit_envelope(report.mse_x, report.mse_x_initial, report.fit_a, report.fit_b,
                 report.fit_c, report.fit_dominates);

    // Windowed steady-state MSE: means over 50-step windows from step 200 on
    // (or the second half, for short horizons).
    const int window = 50;
    const int tail_start = std::min(200, report.steps / 2);
    std::vector<double> windows;
    for (int start = tail_start; start + window <= report.steps; start += window) {
        double mean = 0.0;
        for (int k = start; k < start + window; ++k) mean += report.mse_x[k];
        windows.push_back(mean / window);
    }
    if (windows.empty() && report.steps > tail_start) {
        double mean = 0.0;
        for (int k = tail_start; k < report.steps; ++k) mean += report.mse_x[k];
        windows.push_back(mean / (report.steps - tail_start));
    }
    report.window_max = windows.empty() ? 0.0
                                       : *std::max_element(windows.begin(),
                                                            windows.end());
    report.window_median = median_of(windows);
    report.window_ratio = report.window_median > 0.0
                              ? report.window_max / report.window_median
                              : (report.window_max > 0.0 ? std::numeric_limits<
                                                               double>::infinity()
                                                         : 1.0);
    if (!std::isfinite(report.gramian_min_eig)) report.gramian_min_eig = 0.0;
    return report;
}

int cmd_simulate(const ExperimentConfig& config) {
    const ModelBundle bundle = build_model(config);
    const scenario::Trajectory traj = scenario::simulate(
        bundle.provider, bundle.attack,
        [&](int) { return VectorXd::Zero(bundle.provider.m()); }, bundle.x0,
        config.horizon, config.seeds.front());
    ensure_out_dir(config.out);
    io::write_trajectory(out_path(config.out, "trajectory.csv"), traj);

    std::ofstream meta(out_path(config.out, "trajectory.meta.json"));
    meta << "{\n"
         << "  \"seed\": " << traj.seed << ",\n"
         << "  \"horizon\": " << config.horizon << ",\n"
         << "  \"n\": " << bundle.provider.n() << ",\n"
         << "  \"m\": " << bundle.provider.m() << ",\n"
         << "  \"p\": " << bundle.provider.p() << ",\n"
         << "  \"l\": " << bundle.provider.l() << "\n"
         << "}\n";
    return 0;
}

int cmd_estimate(const ExperimentConfig& config, const std::string& traj_path) {
    const ModelBundle bundle = build_model(config);
    const scenario::Trajectory traj = io::read_trajectory(traj_path);
    const RunResult run = run_estimation(bundle, config, traj);
    ensure_out_dir(config.out);
    io::write_metrics(out_path(config.out, "metrics.csv"), run.metrics);
    io::write_steps(out_path(config.out, "steps.csv"), run.steps);
    return 0;
}

int cmd_detect(const std::string& steps_path, double alpha,
               const std::string& out_dir) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("alpha must lie strictly inside (0, 1)");
    const std::vector<StepOutput> steps = io::read_steps(steps_path);
    ensure_out_dir(out_dir);

    io::Csv csv;
    csv.header = {"k",        "dof",       "statistic", "threshold",
                  "attacked", "degenerate", "stat_constrained",
                  "stat_mixed"};
    int k = 1;
    for (const StepOutput& s : steps) {
        // Decision statistic: unconstrained estimate with its own covariance.
        const DetectionResult det = detect(s.d_hat_u, s.P_du, alpha);
        // Companion statistics for the constrained estimate: against its own
        // covariance and against the unconstrained one (monotonicity check).
        bool degenerate_c = false;
        const double stat_c = chi2_statistic(s.d_hat, s.P_d, &degenerate_c);
        const double stat_mixed = chi2_statistic(s.d_hat, s.P_du);
        csv.rows.push_back({std::to_string(k++), std::to_string(det.dof),
                            io::fmt_double(det.statistic),
                            io::fmt_double(det.threshold),
                            det.attacked ? "1" : "0",
                            (det.degenerate || degenerate_c) ? "1" : "0",
                            io::fmt_double(stat_c), io::fmt_double(stat_mixed)});
    }
    io::write_csv((fs::path(out_dir) / "detection.csv").string(), csv);
    return 0;
}

int cmd_montecarlo(const ExperimentConfig& config) {
    const StabilityReport report = run_montecarlo(config);
    ensure_out_dir(config.out);

    io::Csv curve;
    curve.header = {"k", "mse_x", "mse_d"};
    for (int k = 0; k < report.steps; ++k)
        curve.rows.push_back({std::to_string(k + 1),
                              io::fmt_double(report.mse_x[k]),
                              io::fmt_double(report.mse_d[k])});
    io::write_csv(out_path(config.out, "mse_curve.csv"), curve);

    std::ofstream out(out_path(config.out, "stability.txt"));
    if (!out) throw ConfigError("cannot write stability report");
    out << report.text();
    return 0;
}

int cmd_compare(const ExperimentConfig& config, const std::string& traj_path) {
    ExperimentConfig with = config;
    ExperimentConfig without = config;
    without.attack_constraints = false;
    without.state_constraints = false;

    const ModelBundle bundle_with = build_model(with);
    const ModelBundle bundle_without = build_model(without);

    scenario::Trajectory traj;
    if (!traj_path.empty()) {
        traj = io::read_trajectory(traj_path);
    } else {
        traj = scenario::simulate(
            bundle_with.provider, bundle_with.attack,
            [&](int) { return VectorXd::Zero(bundle_with.provider.m()); },
            bundle_with.x0, config.horizon, config.seeds.front());
    }

    const RunResult run_con = run_estimation(bundle_with, with, traj);
    const RunResult run_unc = run_estimation(bundle_without, without, traj);

    ensure_out_dir(config.out);
    io::Csv csv;
    csv.header = {"k",           "err_x_con",   "err_x_unc",  "err_d_con",
                  "err_d_unc",   "trace_P_x_con", "trace_P_x_unc",
                  "trace_P_d_con", "trace_P_d_unc", "active_d", "active_x"};
    double sum_err_x_con = 0.0, sum_err_x_unc = 0.0;
    double sum_err_d_con = 0.0, sum_err_d_unc = 0.0;
    for (std::size_t i = 0; i < run_con.metrics.size(); ++i) {
        const io::MetricsRow& a = run_con.metrics[i];
        const io::MetricsRow& b = run_unc.metrics[i];
        csv.rows.push_back({std::to_string(a.k), io::fmt_double(a.err_x),
                            io::fmt_double(b.err_x), io::fmt_double(a.err_d),
                            io::fmt_double(b.err_d),
                            io::fmt_double(a.trace_P_x),
                            io::fmt_double(b.trace_P_x),
                            io::fmt_double(a.trace_P_d),
                            io::fmt_double(b.trace_P_d),
                            std::to_string(a.active_d),
                            std::to_string(a.active_x)});
        sum_err_x_con += a.err_x;
        sum_err_x_unc += b.err_x;
        sum_err_d_con += a.err_d;
        sum_err_d_unc += b.err_d;
    }
    io::write_csv(out_path(config.out, "compare.csv"), csv);

    const double steps = static_cast<double>(run_con.metrics.size());
    std::ofstream summary(out_path(config.out, "compare_summary.txt"));
    if (!summary) throw ConfigError("cannot write comparison summary");
    summary << "steps: " << run_con.metrics.size() << '\n'
            << "mean_err_x_constrained: " << io::fmt_double(sum_err_x_con / steps)
            << '\n'
            << "mean_err_x_unconstrained: "
            << io::fmt_double(sum_err_x_unc / steps) << '\n'
            << "mean_err_d_constrained: " << io::fmt_double(sum_err_d_con / steps)
            << '\n'
            << "mean_err_d_unconstrained: "
            << io::fmt_double(sum_err_d_unc / steps) << '\n'
            << "delta_err_x: "
            << io::fmt_double((sum_err_x_con - sum_err_x_unc) / steps) << '\n'
            << "delta_err_d: "
            << io::fmt_double((sum_err_d_con - sum_err_d_unc) / steps) << '\n';
    return 0;
}

}  // namespace crest::cli
