#pragma once

#include <Eigen/Dense>

#include "crest/errors.hpp"

namespace crest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Outcome of the chi-squared attack test at one step.
struct DetectionResult {
    double statistic = 0.0;  // d_hat^T pinv(P_d) d_hat
    double threshold = 0.0;  // upper-tail quantile chi2(dof, alpha)
    int dof = 0;
    double alpha = 0.0;
    bool attacked = false;    // statistic > threshold
    bool degenerate = false;  // P_d was rank deficient; null-space components
                              // of d_hat are excluded from the statistic
};

// Quadratic test statistic d_hat^T pinv(P_d) d_hat for a symmetric PSD P_d.
// Components of d_hat in the null space of P_d are excluded; `degenerate`
// (if given) reports whether any truncation happened.
double chi2_statistic(const VectorXd& d_hat, const MatrixXd& P_d,
                      bool* degenerate = nullptr);

// Upper-tail chi-squared quantile: the x with P[X > x] = alpha for
// X ~ chi2(dof). Computed from the regularized incomplete gamma function,
// inverted by bisection to 1e-10.
double chi2_threshold(int dof, double alpha);

// Upper-tail probability P[X > x] for X ~ chi2(dof).
double chi2_tail(int dof, double x);

// Full test: statistic, threshold at significance alpha with dof = dim(d),
// and the comparison. alpha must lie strictly inside (0, 1).
DetectionResult detect(const VectorXd& d_hat, const MatrixXd& P_d, double alpha);

}  // namespace crest
