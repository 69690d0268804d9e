#pragma once

#include <Eigen/Dense>
#include <limits>

#include "crest/errors.hpp"

// Small shared numeric helpers. Conventions used throughout the library:
//  - every covariance is symmetrized as (X + X^T)/2 after it is formed;
//  - numerical rank uses the SVD with threshold max(dim) * eps * sigma_max;
//  - PSD tests tolerate eigenvalues down to -1e-10 * ||X||;
//  - pseudoinverses truncate eigen/singular values at dim * eps * max.

namespace crest {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kPsdTolFactor = 1e-10;   // scale factor for PSD slack
inline constexpr double kWeightRegFactor = 1e-9; // ridge for singular weights

inline MatrixXd symmetrize(const MatrixXd& X) {
    return 0.5 * (X + X.transpose());
}

// Numerical rank by SVD: tau = max(rows, cols) * eps * sigma_max.
inline int numerical_rank(const MatrixXd& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    const double tau = static_cast<double>(std::max(M.rows(), M.cols())) *
                       std::numeric_limits<double>::epsilon() * s(0);
    int r = 0;
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > tau) ++r;
    return r;
}

// Eigen-decomposition of a symmetric matrix (input is symmetrized first).
inline Eigen::SelfAdjointEigenSolver<MatrixXd> eig_sym(const MatrixXd& X) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(X));
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigendecomposition failed");
    return es;
}

inline double spectral_norm_sym(const MatrixXd& X) {
    if (X.size() == 0) return 0.0;
    const VectorXd ev = eig_sym(X).eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline double min_eig_sym(const MatrixXd& X) {
    if (X.size() == 0) return 0.0;
    return eig_sym(X).eigenvalues()(0);
}

// X >= 0 up to slack kPsdTolFactor * ||X||.
inline bool is_psd(const MatrixXd& X) {
    if (X.size() == 0) return true;
    const VectorXd ev = eig_sym(X).eigenvalues();
    const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    return ev(0) >= -kPsdTolFactor * scale;
}

// X > 0 strictly beyond the PSD slack.
inline bool is_pd(const MatrixXd& X) {
    if (X.size() == 0) return false;
    const VectorXd ev = eig_sym(X).eigenvalues();
    const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    return ev(0) > kPsdTolFactor * scale && ev(0) > 0.0;
}

// Pseudoinverse of a symmetric PSD matrix. Eigenvalues at or below
// dim * eps * lambda_max are truncated (this includes any negatives within
// the PSD slack). rank_out, if given, receives the number of kept modes.
inline MatrixXd pinv_psd(const MatrixXd& X, int* rank_out = nullptr) {
    const int n = static_cast<int>(X.rows());
    if (n == 0) {
        if (rank_out) *rank_out = 0;
        return MatrixXd(0, 0);
    }
    auto es = eig_sym(X);
    const VectorXd& ev = es.eigenvalues();
    const double lmax = std::max(0.0, ev(n - 1));
    const double tau = n * std::numeric_limits<double>::epsilon() * lmax;
    VectorXd inv = VectorXd::Zero(n);
    int r = 0;
    for (int i = 0; i < n; ++i) {
        if (ev(i) > tau) {
            inv(i) = 1.0 / ev(i);
            ++r;
        }
    }
    if (rank_out) *rank_out = r;
    return symmetrize(es.eigenvectors() * inv.asDiagonal() *
                      es.eigenvectors().transpose());
}

// Symmetric PSD square root; eigenvalues below zero (noise) clamp to zero.
inline MatrixXd psd_sqrt(const MatrixXd& X) {
    if (X.size() == 0) return X;
    auto es = eig_sym(X);
    VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) ev(i) = std::sqrt(std::max(0.0, ev(i)));
    return symmetrize(es.eigenvectors() * ev.asDiagonal() *
                      es.eigenvectors().transpose());
}

// Inverse of a covariance for use as a projection weight. Negative
// eigenvalues are clipped to zero (the recursion's literal formulas can leave
// small negative directions behind at constrained steps); if the clipped
// matrix is singular a ridge eps = 1e-9 * trace(P)/n is added before
// inverting. A negative part that dominates the positive part raises
// NumericalError.
inline MatrixXd inverse_weight(const MatrixXd& P) {
    const int n = static_cast<int>(P.rows());
    if (n == 0) return MatrixXd(0, 0);
    auto es = eig_sym(P);
    VectorXd ev = es.eigenvalues();
    const double scale = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
    if (-ev(0) > std::max(ev(n - 1), 0.0) + kPsdTolFactor * scale)
        throw NumericalError("covariance lost positive semidefiniteness: the "
                             "negative part dominates");
    for (int i = 0; i < n; ++i) ev(i) = std::max(0.0, ev(i));
    const double lmax = ev(n - 1);
    const double rank_tau = n * std::numeric_limits<double>::epsilon() * lmax;
    if (ev(0) <= rank_tau) {
        double tr = ev.sum();
        const double eps = kWeightRegFactor * (tr > 0.0 ? tr / n : 1.0);
        ev.array() += eps;
    }
    VectorXd inv(n);
    for (int i = 0; i < n; ++i) inv(i) = 1.0 / ev(i);
    return symmetrize(es.eigenvectors() * inv.asDiagonal() *
                      es.eigenvectors().transpose());
}

}  // namespace crest
