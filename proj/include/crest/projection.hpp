#pragma once

#include <Eigen/Dense>
#include <vector>

#include "crest/errors.hpp"

namespace crest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Result of projecting a point onto { z : A z <= b } in the W-norm.
struct ProjectionResult {
    VectorXd z;                // projected point
    std::vector<int> active;   // rows of A tight at z (ascending)
    MatrixXd gamma;            // q x r gain, gamma = W^-1 Abar^T (Abar W^-1 Abar^T)^-1
    VectorXd multipliers;      // dual values for the active rows
};

// Solves  min_z (z - z_u)^T W (z - z_u)  s.t.  A z <= b  with W symmetric
// positive definite, by a primal active-set method: start from the empty
// working set, repeatedly drop the most negative multiplier or add the most
// violated row (ties break toward the lowest row index), and stop when the
// iterate is primal feasible with nonnegative multipliers. Each working-set
// solve uses the closed form z = z_u - gamma (Abar z_u - bbar). Row-rank
// deficient working sets are pruned by column-pivoted QR before inversion.
//
// Tolerances: feasibility 1e-9 * (1 + ||b||_inf), duals -1e-9, iteration cap
// 10 * (s + q). Throws ArgumentError (bad dimensions / W not SPD),
// InfeasibleError (empty region), ConvergenceError (cap hit on a feasible
// region).
ProjectionResult project(const VectorXd& z_u, const MatrixXd& W,
                         const MatrixXd& A, const VectorXd& b);

// gamma = W_inv Abar^T (Abar W_inv Abar^T)^-1 for a full-row-rank Abar,
// where W_inv is the inverse weight (for estimation, the covariance itself).
MatrixXd gamma_matrix(const MatrixXd& W_inv, const MatrixXd& A_bar);

// Covariance of the projected estimate:
//   P' = (I - gamma Abar) P (I - gamma Abar)^T, symmetrized.
// With zero active rows this returns P unchanged.
MatrixXd project_covariance(const MatrixXd& P, const MatrixXd& gamma,
                            const MatrixXd& A_bar);

// Phase-1 feasibility test for { z : A z <= b }: minimizes an upper bound t
// on the worst violation through the same active-set machinery and reports
// whether t can be driven to (numerical) zero.
bool region_feasible(const MatrixXd& A, const VectorXd& b);

}  // namespace crest
