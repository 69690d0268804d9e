#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crest/errors.hpp"
#include "crest/model.hpp"

namespace crest {

// Posterior state of the estimator after step k.
struct FilterState {
    VectorXd x_hat;  // constrained state estimate x_hat_{k|k}
    MatrixXd P_x;    // its covariance
    int k = 0;
};

// Every intermediate quantity of one estimation step, in execution order:
// prediction, unconstrained attack estimate, constrained attack estimate,
// time update, measurement update, constrained state estimate.
struct StepOutput {
    VectorXd x_pred;  // A x_hat + B u
    MatrixXd P_pred;  // A P_x A^T + Q

    MatrixXd R_tilde;  // C P_pred C^T + R
    MatrixXd M;        // attack estimator gain, M C G = I
    VectorXd d_hat_u;  // unconstrained attack estimate (of d_{k-1})
    MatrixXd P_du;     // its covariance
    VectorXd d_hat;    // constrained attack estimate
    MatrixXd P_d;      // its covariance
    MatrixXd P_xd;     // state/attack error cross covariance

    VectorXd x_star;  // time-updated state estimate
    MatrixXd P_star;  // its covariance
    MatrixXd R_star;  // time-updated output residual covariance

    MatrixXd L;        // measurement gain
    VectorXd x_hat_u;  // unconstrained posterior state estimate
    MatrixXd P_xu;     // its covariance
    VectorXd x_hat;    // constrained posterior state estimate
    MatrixXd P_x;      // its covariance

    std::vector<int> active_d;  // active attack-constraint rows
    std::vector<int> active_x;  // active state-constraint rows
};

// Whether the time update propagates the unconstrained or the constrained
// attack estimate into x_star. The covariance always uses the constrained
// attack covariance.
enum class TimeUpdateAttack { kUnconstrained, kConstrained };

struct FilterOptions {
    TimeUpdateAttack time_update_attack = TimeUpdateAttack::kUnconstrained;
};

// ---- The six stages as pure functions -------------------------------------

struct Prediction {
    VectorXd x_pred;
    MatrixXd P_pred;
};
Prediction predict(const FilterState& state, const SystemStep& prev,
                   const VectorXd& u);

struct AttackEstimate {
    MatrixXd R_tilde;
    MatrixXd M;
    VectorXd d_hat_u;
    MatrixXd P_du;
    MatrixXd P_xd;
};
// Minimum-variance unbiased estimate of d_{k-1} from the measurement
// residual. P_x_prev is the previous posterior covariance (it enters the
// cross covariance P_xd). Throws SingularityError when rank(C_k G_{k-1}) < p.
AttackEstimate estimate_attack(const VectorXd& x_pred, const MatrixXd& P_pred,
                               const MatrixXd& P_x_prev, const SystemStep& prev,
                               const SystemStep& cur, const VectorXd& y);

struct ConstrainedEstimate {
    VectorXd z;                // projected estimate
    MatrixXd P;                // projected covariance
    std::vector<int> active;   // active constraint rows
    MatrixXd gamma;            // projection gain for the active rows
};
// Projects the attack estimate onto { d : A_d d <= b_d } in the norm
// weighted by inv(P_du); pass-through when there are no rows.
ConstrainedEstimate constrain_attack(const VectorXd& d_hat_u,
                                     const MatrixXd& P_du, const MatrixXd& A_d,
                                     const VectorXd& b_d);

struct TimeUpdate {
    VectorXd x_star;
    MatrixXd P_star;
    MatrixXd R_star;
};
// Folds the attack estimate into the prediction. d_used is the attack
// estimate chosen by FilterOptions; P_d is the constrained attack covariance.
TimeUpdate time_update(const VectorXd& x_pred, const VectorXd& d_used,
                       const MatrixXd& P_x_prev, const MatrixXd& P_xd,
                       const MatrixXd& P_d, const SystemStep& prev,
                       const SystemStep& cur, const MatrixXd& M);

struct MeasurementUpdate {
    MatrixXd L;
    VectorXd x_hat_u;
    MatrixXd P_xu;
};
// Gain-based measurement update; R_star is inverted by pseudoinverse so a
// singular residual covariance degrades gracefully. An R_star eigenvalue
// below -1e-10 * ||R_star|| raises NumericalError.
MeasurementUpdate measurement_update(const VectorXd& x_star,
                                     const MatrixXd& P_star,
                                     const MatrixXd& R_star,
                                     const SystemStep& prev,
                                     const SystemStep& cur, const MatrixXd& M,
                                     const VectorXd& y);

// Projects the posterior state estimate onto { x : B_x x <= c_x } in the
// norm weighted by inv(P_xu) (ridge-regularized when P_xu is singular).
ConstrainedEstimate constrain_state(const VectorXd& x_hat_u,
                                    const MatrixXd& P_xu, const MatrixXd& B_x,
                                    const VectorXd& c_x);

// Transition matrix of the noise-decoupled transformed error system used by
// the stability and detectability diagnostics:
//   A_tilde = (I - G_k M_k pinv(C_k G_{k-1} M_k) C_k) Abar Gbar,
//   Abar    = (I - G_{k-1} M_k C_k) A_{k-1},
//   Gbar    = I - gamma_x_prev Bbar_prev (identity when no rows were active).
// C_k G_{k-1} M_k is l x l with rank at most p; the pseudoinverse is exact
// on the attack subspace at that maximal rank. Throws SingularityError when
// rank(C_k G_{k-1} M_k) < p.
MatrixXd transformed_transition(const SystemStep& prev, const SystemStep& cur,
                                const MatrixXd& M, const MatrixXd& gamma_x_prev,
                                const MatrixXd& B_bar_prev);

// Initial state: x_hat_0 is the first measurement back-projected through C
// when C is square and invertible, zero otherwise; P_0 = p0_scale * I.
FilterState initial_state(const SystemStep& step0, const VectorXd& y0,
                          double p0_scale);

// Sequential state machine tying the stages together. step() consumes the
// measurement y_{k+1} (with models for steps k and k+1 and the input u_k),
// advances the internal state, and returns every intermediate quantity.
// The first stage failure aborts the step with step/stage context.
class Filter {
public:
    explicit Filter(FilterState init, FilterOptions opt = {});

    StepOutput step(const SystemStep& prev, const SystemStep& cur,
                    const VectorXd& u, const VectorXd& y,
                    const ConstraintSet& cs);

    const FilterState& state() const { return state_; }
    const FilterOptions& options() const { return options_; }

private:
    FilterState state_;
    FilterOptions options_;
};

}  // namespace crest
