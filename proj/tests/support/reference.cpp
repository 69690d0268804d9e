#include "support/reference.hpp"

#include <Eigen/Eigenvalues>

namespace crest::test {
namespace {

Eigen::MatrixXd sym(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

// Eigendecomposition pseudoinverse for the (possibly singular) residual
// covariance.
Eigen::MatrixXd pinv_sym(const Eigen::MatrixXd& m) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym(m));
    const Eigen::VectorXd vals = eig.eigenvalues();
    const double cutoff = static_cast<double>(m.rows()) *
                          std::numeric_limits<double>::epsilon() *
                          std::max(vals.cwiseAbs().maxCoeff(), 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
    for (int i = 0; i < vals.size(); ++i)
        if (vals(i) > cutoff) inv(i) = 1.0 / vals(i);
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::vector<RefStep> unconstrained_reference(
    const crest::ModelProvider& provider,
    const std::vector<Eigen::VectorXd>& u, const std::vector<Eigen::VectorXd>& y,
    const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0) {
    std::vector<RefStep> out;
    Eigen::VectorXd x = x0;
    Eigen::MatrixXd P = P0;

    for (std::size_t k = 1; k < y.size(); ++k) {
        const crest::SystemStep prev = provider.at(static_cast<int>(k) - 1);
        const crest::SystemStep cur = provider.at(static_cast<int>(k));
        const Eigen::MatrixXd& A = prev.A;
        const Eigen::MatrixXd& G = prev.G;
        const Eigen::MatrixXd& Q = prev.Q;
        const Eigen::MatrixXd& C = cur.C;
        const Eigen::MatrixXd& R = cur.R;
        const int n = static_cast<int>(A.rows());

        RefStep s;
        s.x_pred = A * x + prev.B * u[k - 1];
        s.P_pred = sym(A * P * A.transpose() + Q);

        s.R_tilde = sym(C * s.P_pred * C.transpose() + R);
        const Eigen::MatrixXd Rt_inv = s.R_tilde.inverse();
        const Eigen::MatrixXd CG = C * G;
        s.P_d = (CG.transpose() * Rt_inv * CG).inverse();
        s.M = s.P_d * CG.transpose() * Rt_inv;
        s.d_hat = s.M * (y[k] - C * s.x_pred);
        s.P_xd = -P * A.transpose() * C.transpose() * s.M.transpose();

        s.x_star = s.x_pred + G * s.d_hat;
        const Eigen::MatrixXd GMCQ = G * s.M * C * Q;
        s.P_star = sym(A * P * A.transpose() + A * s.P_xd * G.transpose() +
                       G * s.P_xd.transpose() * A.transpose() +
                       G * s.P_d * G.transpose() - GMCQ - GMCQ.transpose() + Q);
        const Eigen::MatrixXd CGMR = C * G * s.M * R;
        s.R_star = sym(C * s.P_star * C.transpose() + R - CGMR - CGMR.transpose());

        s.L = (s.P_star * C.transpose() - G * s.M * R) * pinv_sym(s.R_star);
        s.x_hat = s.x_star + s.L * (y[k] - C * s.x_star);
        const Eigen::MatrixXd ImLC = Eigen::MatrixXd::Identity(n, n) - s.L * C;
        const Eigen::MatrixXd GMR = G * s.M * R;
        s.P_x = sym(ImLC * s.P_star * ImLC.transpose() +
                    ImLC * GMR * s.L.transpose() +
                    s.L * GMR.transpose() * ImLC.transpose() +
                    s.L * R * s.L.transpose());

        x = s.x_hat;
        P = s.P_x;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace crest::test
