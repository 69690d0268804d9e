#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "crest/errors.hpp"

namespace crest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// One step of a linear time-varying stochastic system
//
//   x_{k+1} = A_k x_k + B_k u_k + G_k d_k + w_k,   w_k ~ N(0, Q_k)
//   y_k     = C_k x_k + v_k,                       v_k ~ N(0, R_k)
//
// where d_k is an unknown actuator input (attack). The constructor enforces
// mutually consistent dimensions and finite entries; positive-definiteness
// of the noise covariances is the business of validate_model().
struct SystemStep {
    MatrixXd A;  // n x n state transition
    MatrixXd B;  // n x m known-input matrix
    MatrixXd C;  // l x n output matrix
    MatrixXd G;  // n x p attack input matrix
    MatrixXd Q;  // n x n process noise covariance (PSD)
    MatrixXd R;  // l x l measurement noise covariance (PD)

    SystemStep(MatrixXd A_, MatrixXd B_, MatrixXd C_, MatrixXd G_,
               MatrixXd Q_, MatrixXd R_);

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
    int p() const { return static_cast<int>(G.cols()); }
    int l() const { return static_cast<int>(C.rows()); }
};

// Step-indexed source of system matrices: either one constant step or a
// finite sequence. A sequence holds its last element for indices past the
// end, so at(k) is defined for every k >= 0. Dimensions are constant.
class ModelProvider {
public:
    static ModelProvider constant(SystemStep step);
    static ModelProvider sequence(std::vector<SystemStep> steps);

    const SystemStep& at(int k) const;

    int n() const { return steps_.front().n(); }
    int m() const { return steps_.front().m(); }
    int p() const { return steps_.front().p(); }
    int l() const { return steps_.front().l(); }
    bool is_constant() const { return steps_.size() == 1; }

private:
    explicit ModelProvider(std::vector<SystemStep> steps);
    std::vector<SystemStep> steps_;
};

// Linear inequality constraints, one block per estimated signal:
//   attack rows  A_d d <= b_d   (s_d x p)
//   state rows   B_x x <= c_x   (s_x x n)
// Either block may be empty (zero rows). Column counts are retained even
// for empty blocks so dimension checks stay meaningful.
struct ConstraintSet {
    MatrixXd A_d;
    VectorXd b_d;
    MatrixXd B_x;
    VectorXd c_x;

    ConstraintSet(MatrixXd A_d_, VectorXd b_d_, MatrixXd B_x_, VectorXd c_x_);

    // Empty constraint set for attack dimension p and state dimension n.
    static ConstraintSet none(int p, int n);

    int attack_rows() const { return static_cast<int>(A_d.rows()); }
    int state_rows() const { return static_cast<int>(B_x.rows()); }
};

struct ValidationEntry {
    int k = -1;          // step index, or -1 for step-independent checks
    std::string check;   // short name of the check
    bool pass = false;
    std::string detail;  // human-readable explanation
};

struct ValidationReport {
    bool pass = true;
    std::vector<ValidationEntry> entries;
    std::string summary() const;
};

// Checks that the estimator's existence conditions hold for steps
// 1..horizon: rank(C_k G_{k-1}) = p, R_k symmetric PD, Q_k symmetric PSD.
// A dimension change between consecutive steps throws StructuralError;
// condition failures are reported, not thrown.
ValidationReport validate_model(const ModelProvider& model, int horizon);

// Checks each non-empty constraint block for feasibility (phase-1 solve)
// and that the state block leaves slack directions: rank(B_x) < n.
ValidationReport validate_constraints(const ConstraintSet& cs);

}  // namespace crest
