#pragma once

// Straight-line unconstrained estimation recursion, written directly from
// the update formulas with no projection machinery and no shared code with
// the library filter. Used to check that the full step collapses to this
// recursion when both constraint blocks are disabled.

#include <Eigen/Dense>
#include <vector>

#include "crest/model.hpp"

namespace crest::test {

struct RefStep {
    Eigen::VectorXd x_pred;
    Eigen::MatrixXd P_pred;
    Eigen::MatrixXd R_tilde;
    Eigen::MatrixXd M;
    Eigen::VectorXd d_hat;
    Eigen::MatrixXd P_d;
    Eigen::MatrixXd P_xd;
    Eigen::VectorXd x_star;
    Eigen::MatrixXd P_star;
    Eigen::MatrixXd R_star;
    Eigen::MatrixXd L;
    Eigen::VectorXd x_hat;
    Eigen::MatrixXd P_x;
};

// Runs steps k = 1 .. y.size()-1 (y[0] seeds nothing; the caller supplies
// x0/P0). u[k-1] is the input applied at step k-1.
std::vector<RefStep> unconstrained_reference(
    const crest::ModelProvider& provider,
    const std::vector<Eigen::VectorXd>& u, const std::vector<Eigen::VectorXd>& y,
    const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0);

}  // namespace crest::test
