#include "crest/scenario.hpp"

#include <cmath>

#include "crest/linalg.hpp"

namespace crest::scenario {

namespace {

constexpr double kDt = 0.1;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

}  // namespace

SystemStep agent_model() {
    MatrixXd A(4, 4);
    A << 1, 0, kDt, 0,
         0, 1, 0, kDt,
         0, 0, 1, 0,
         0, 0, 0, 1;
    MatrixXd B(4, 2);
    B << 0, 0,
         0, 0,
         kDt, 0,
         0, kDt;
    const MatrixXd C = MatrixXd::Identity(4, 4);
    const MatrixXd Q = 0.1 * MatrixXd::Identity(4, 4);
    const MatrixXd R = 0.01 * MatrixXd::Identity(4, 4);
    return SystemStep(A, B, C, B, Q, R);
}

ModelProvider build_multiagent(int n_agents) {
    require(n_agents >= 1, "agent count must be >= 1");
    const SystemStep one = agent_model();
    const int n = 4 * n_agents;
    const int m = 2 * n_agents;
    MatrixXd A = MatrixXd::Zero(n, n);
    MatrixXd B = MatrixXd::Zero(n, m);
    for (int a = 0; a < n_agents; ++a) {
        A.block(4 * a, 4 * a, 4, 4) = one.A;
        B.block(4 * a, 2 * a, 4, 2) = one.B;
    }
    const MatrixXd C = MatrixXd::Identity(n, n);
    const MatrixXd Q = 0.1 * MatrixXd::Identity(n, n);
    const MatrixXd R = 0.01 * MatrixXd::Identity(n, n);
    return ModelProvider::constant(SystemStep(A, B, C, B, Q, R));
}

VectorXd attack_signal(int k, int p) {
    require(p >= 1, "attack dimension must be >= 1");
    VectorXd d = VectorXd::Zero(p);
    if (k < 100 || k >= 1000) return d;
    const int r = k % 100;  // position inside the current hundred-step block
    double value = 0.0;
    if (r < 40)
        value = 20.0;
    else if (r < 60)
        value = 0.0;
    else
        value = -20.0;
    for (int i = 0; i < p; i += 2) d(i) = value;
    return d;
}

ConstraintSet build_constraints(const ScenarioOptions& opt,
                                const VectorXd& x_pred, const VectorXd& u) {
    require(opt.n_agents >= 1, "agent count must be >= 1");
    const int n = 4 * opt.n_agents;
    const int p = 2 * opt.n_agents;
    require(x_pred.size() == n, "predicted state dimension mismatch");
    require(u.size() == p, "input dimension mismatch");

    MatrixXd A_d(0, p);
    VectorXd b_d(0);
    if (opt.attack_constraints) {
        // |d_i + u_i| <= accel_limit, two rows per channel.
        A_d.resize(2 * p, p);
        b_d.resize(2 * p);
        A_d.setZero();
        for (int i = 0; i < p; ++i) {
            A_d(2 * i, i) = 1.0;
            b_d(2 * i) = opt.accel_limit - u(i);
            A_d(2 * i + 1, i) = -1.0;
            b_d(2 * i + 1) = opt.accel_limit + u(i);
        }
    }

    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    if (opt.state_constraints) {
        if (opt.speed_bound == SpeedBound::kPerAgent) {
            // |v| <= speed_limit per agent, axis, and sign.
            for (int a = 0; a < opt.n_agents; ++a) {
                for (int axis = 0; axis < 2; ++axis) {
                    const int idx = 4 * a + 2 + axis;
                    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
                    row(idx) = 1.0;
                    rows.push_back(row);
                    rhs.push_back(opt.speed_limit);
                    row(idx) = -1.0;
                    rows.push_back(row);
                    rhs.push_back(opt.speed_limit);
                }
            }
        } else {
            // |v_i - v_j| <= speed_limit per pair, axis, and sign.
            for (int a = 0; a < opt.n_agents; ++a) {
                for (int c = a + 1; c < opt.n_agents; ++c) {
                    for (int axis = 0; axis < 2; ++axis) {
                        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(n);
                        row(4 * a + 2 + axis) = 1.0;
                        row(4 * c + 2 + axis) = -1.0;
                        rows.push_back(row);
                        rhs.push_back(opt.speed_limit);
                        rows.push_back(-row);
                        rhs.push_back(opt.speed_limit);
                    }
                }
            }
        }

        // Pairwise separation: the true requirement is the union of the four
        // half-spaces +-(r_axis_i - r_axis_j) >= min_distance. Convexify by
        // keeping, per pair, the single half-space with the largest margin at
        // the predicted state.
        for (int a = 0; a < opt.n_agents; ++a) {
            for (int c = a + 1; c < opt.n_agents; ++c) {
                double best_margin = -std::numeric_limits<double>::infinity();
                Eigen::RowVectorXd best_row;
                for (int axis = 0; axis < 2; ++axis) {
                    for (double sign : {1.0, -1.0}) {
                        Eigen::RowVectorXd sep = Eigen::RowVectorXd::Zero(n);
                        sep(4 * a + axis) = sign;
                        sep(4 * c + axis) = -sign;
                        const double margin =
                            sep.dot(x_pred) - opt.min_distance;
                        if (margin > best_margin) {
                            best_margin = margin;
                            best_row = sep;
                        }
                    }
                }
                // Emit sep . x >= min_distance as -sep . x <= -min_distance.
                rows.push_back(-best_row);
                rhs.push_back(-opt.min_distance);
            }
        }
    }

    MatrixXd B_x(static_cast<int>(rows.size()), n);
    VectorXd c_x(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        B_x.row(static_cast<int>(i)) = rows[i];
        c_x(static_cast<int>(i)) = rhs[i];
    }
    return ConstraintSet(A_d, b_d, B_x, c_x);
}

VectorXd default_initial_state(int n_agents) {
    require(n_agents >= 1, "agent count must be >= 1");
    VectorXd x0 = VectorXd::Zero(4 * n_agents);
    for (int a = 0; a < n_agents; ++a) x0(4 * a + 1) = 200.0 * a;
    return x0;
}

double GaussianSampler::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller on uniforms u = (counter >> 11) * 2^-53 in [0, 1), with
    // u1 mapped to (0, 1] so the logarithm stays finite.
    const double scale = 0x1.0p-53;
    const double u1 = 1.0 - static_cast<double>(rng_() >> 11) * scale;
    const double u2 = static_cast<double>(rng_() >> 11) * scale;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

VectorXd GaussianSampler::vec(int size) {
    VectorXd z(size);
    for (int i = 0; i < size; ++i) z(i) = next();
    return z;
}

Trajectory simulate(const ModelProvider& model,
                    const std::function<VectorXd(int)>& attack,
                    const std::function<VectorXd(int)>& input,
                    const VectorXd& x0, int horizon, std::uint64_t seed) {
    require(horizon >= 1, "horizon must be >= 1");
    require(x0.size() == model.n(), "initial state dimension mismatch");

    Trajectory traj;
    traj.seed = seed;
    traj.x.reserve(horizon);
    traj.u.reserve(horizon);
    traj.d.reserve(horizon);
    traj.y.reserve(horizon);
    traj.w.reserve(horizon);
    traj.v.reserve(horizon);

    GaussianSampler sampler(seed);
    MatrixXd sqrtQ, sqrtR;
    bool sqrt_ready = false;

    VectorXd x = x0;
    for (int k = 0; k < horizon; ++k) {
        const SystemStep& step = model.at(k);
        if (!sqrt_ready || !model.is_constant()) {
            sqrtQ = psd_sqrt(step.Q);
            sqrtR = psd_sqrt(step.R);
            sqrt_ready = true;
        }

        const VectorXd u = input(k);
        const VectorXd d = attack(k);
        require(u.size() == step.m(), "input policy dimension mismatch");
        require(d.size() == step.p(), "attack dimension mismatch");

        const VectorXd v = sqrtR * sampler.vec(step.l());
        const VectorXd w = sqrtQ * sampler.vec(step.n());
        const VectorXd y = step.C * x + v;

        traj.x.push_back(x);
        traj.u.push_back(u);
        traj.d.push_back(d);
        traj.y.push_back(y);
        traj.w.push_back(w);
        traj.v.push_back(v);

        x = step.A * x + step.B * u + step.G * d + w;
    }
    return traj;
}

}  // namespace crest::scenario
