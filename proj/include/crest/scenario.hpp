#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "crest/model.hpp"

// Multi-agent planar rendezvous benchmark: each agent is a discrete double
// integrator with state (r_x, r_y, v_x, v_y) sampled at 0.1 s, fully
// measured, driven through its acceleration channels by both the nominal
// input and an actuator attack.

namespace crest::scenario {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Single-agent matrices: A is the 4x4 double integrator with dt = 0.1,
// B = G place accelerations on the velocity components, C = I,
// Q = 0.1 I, R = 0.01 I.
SystemStep agent_model();

// Block-diagonal composition of n_agents copies: n = 4a, m = p = 2a, l = 4a.
ModelProvider build_multiagent(int n_agents);

// Square-wave actuator attack of amplitude 20 on every x-acceleration
// channel (even 0-based indices of the p-vector); y-channels stay zero.
// Segments repeat per hundred steps n = 1..9: +20 for the first 40 steps,
// 0 for the next 20, -20 for the last 40; zero before step 100 and from
// step 1000 on.
VectorXd attack_signal(int k, int p);

enum class SpeedBound {
    kPerAgent,   // |v_axis| <= limit for each agent and axis
    kRelative,   // |v_axis_i - v_axis_j| <= limit for each pair and axis
};

struct ScenarioOptions {
    int n_agents = 2;
    double accel_limit = 20.0;    // |d + u| bound per channel
    double speed_limit = 80.0;    // velocity bound (see speed_bound)
    double min_distance = 100.0;  // pairwise separation lower bound
    SpeedBound speed_bound = SpeedBound::kPerAgent;
    bool attack_constraints = true;
    bool state_constraints = true;
};

// Constraint blocks for one step. Attack rows bound each channel by
// |d + u| <= accel_limit. State rows bound the velocities, plus one row per
// agent pair approximating the (non-convex) separation requirement
// max_axis |r_axis_i - r_axis_j| >= min_distance by the single half-space
// with the largest margin at the predicted state.
ConstraintSet build_constraints(const ScenarioOptions& opt,
                                const VectorXd& x_pred, const VectorXd& u);

// Agents strung 200 apart along the y axis, all velocities zero.
VectorXd default_initial_state(int n_agents);

// Simulated closed-record run: states, inputs, attacks, measurements and the
// noise draws that produced them. Entries k = 0..steps-1 satisfy exactly
//   x_{k+1} = A_k x_k + B_k u_k + G_k d_k + w_k  and  y_k = C_k x_k + v_k.
struct Trajectory {
    std::vector<VectorXd> x, u, d, y, w, v;
    std::uint64_t seed = 0;
    int steps() const { return static_cast<int>(x.size()); }
};

// Deterministic Gaussian sampler: mt19937_64 + Box-Muller. u1, u2 are drawn
// as (counter >> 11) * 2^-53 mapped into (0, 1]; z = sqrt(-2 ln u1) *
// {cos, sin}(2 pi u2). Fully reproducible for a given seed.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}
    double next();
    VectorXd vec(int size);

private:
    std::mt19937_64 rng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Simulates `horizon` steps from x0 with w ~ N(0, Q), v ~ N(0, R) drawn from
// GaussianSampler(seed) in the fixed order (v_k then w_k per step).
Trajectory simulate(const ModelProvider& model,
                    const std::function<VectorXd(int)>& attack,
                    const std::function<VectorXd(int)>& input,
                    const VectorXd& x0, int horizon, std::uint64_t seed);

}  // namespace crest::scenario
