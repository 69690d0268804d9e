#include "crest/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crest/linalg.hpp"

namespace crest {

namespace {

constexpr double kDualTol = 1e-9;

struct WorkingSolve {
    VectorXd z;
    VectorXd lambda;        // one multiplier per kept row
    MatrixXd gamma;         // q x r
    std::vector<int> kept;  // surviving row indices (subset of the working set)
};

// Equality-constrained solve on the rows in `working`. Rows that are linearly
// dependent on earlier ones (column-pivoted QR of Abar^T) are dropped before
// forming (Abar W^-1 Abar^T)^-1.
WorkingSolve solve_working(const VectorXd& z_u, const Eigen::LLT<MatrixXd>& W_llt,
                           const MatrixXd& A, const VectorXd& b,
                           const std::vector<int>& working) {
    const int q = static_cast<int>(z_u.size());
    WorkingSolve out;
    if (working.empty()) {
        out.z = z_u;
        out.gamma = MatrixXd(q, 0);
        out.lambda = VectorXd(0);
        return out;
    }

    MatrixXd Aw(static_cast<int>(working.size()), q);
    for (std::size_t i = 0; i < working.size(); ++i) Aw.row(static_cast<int>(i)) = A.row(working[i]);

    std::vector<int> kept_local(working.size());
    for (std::size_t i = 0; i < working.size(); ++i) kept_local[i] = static_cast<int>(i);

    Eigen::ColPivHouseholderQR<MatrixXd> qr(Aw.transpose());
    const int rank = static_cast<int>(qr.rank());
    if (rank < Aw.rows()) {
        const auto& perm = qr.colsPermutation().indices();
        kept_local.assign(perm.data(), perm.data() + rank);
        std::sort(kept_local.begin(), kept_local.end());
        MatrixXd Ak(rank, q);
        for (int i = 0; i < rank; ++i) Ak.row(i) = Aw.row(kept_local[i]);
        Aw = std::move(Ak);
    }

    out.kept.reserve(kept_local.size());
    for (int idx : kept_local) out.kept.push_back(working[static_cast<std::size_t>(idx)]);

    VectorXd bw(Aw.rows());
    for (int i = 0; i < Aw.rows(); ++i) bw(i) = b(out.kept[static_cast<std::size_t>(i)]);

    const MatrixXd WinvAt = W_llt.solve(Aw.transpose());  // q x r
    const MatrixXd S = symmetrize(Aw * WinvAt);           // r x r, SPD
    Eigen::LLT<MatrixXd> S_llt(S);
    if (S_llt.info() != Eigen::Success)
        throw NumericalError("active-row Gram matrix is not positive definite");

    const VectorXd resid = Aw * z_u - bw;
    const VectorXd S_inv_resid = S_llt.solve(resid);
    out.gamma = WinvAt * S_llt.solve(MatrixXd::Identity(Aw.rows(), Aw.rows()));
    out.z = z_u - out.gamma * resid;
    // Stationarity 2 W (z - z_u) + Abar^T lambda = 0 gives the duals.
    out.lambda = 2.0 * S_inv_resid;
    return out;
}

// Core loop shared by project() and the phase-1 feasibility solve.
//
// The working set stays linearly independent by construction: a violated row
// that is dependent on the current working rows cannot simply join them (the
// combined equality system would be inconsistent), so an exchange releases
// the working row picked by a dual ratio test and admits the candidate in the
// same move, which restores full rank. When every dependence coefficient is
// nonpositive the candidate row is violated by every point satisfying the
// working rows, which certifies an empty region.
ProjectionResult active_set_solve(const VectorXd& z_u,
                                  const Eigen::LLT<MatrixXd>& W_llt,
                                  const MatrixXd& A, const VectorXd& b,
                                  bool classify_on_cap) {
    const int q = static_cast<int>(z_u.size());
    const int s = static_cast<int>(A.rows());
    const double tau_feas =
        1e-9 * (1.0 + (s > 0 ? b.cwiseAbs().maxCoeff() : 0.0));

    if (s == 0) return {z_u, {}, MatrixXd(q, 0), VectorXd(0)};

    std::vector<int> working;
    const int cap = 10 * (s + q);
    for (int iter = 0; iter < cap; ++iter) {
        WorkingSolve ws = solve_working(z_u, W_llt, A, b, working);
        working = ws.kept;  // safety net; a no-op for independent sets

        // Drop the most negative multiplier first (ties: lowest row index).
        if (ws.lambda.size() > 0) {
            int drop = -1;
            double worst = -kDualTol;
            for (int i = 0; i < ws.lambda.size(); ++i) {
                if (ws.lambda(i) < worst) {
                    worst = ws.lambda(i);
                    drop = i;
                }
            }
            if (drop >= 0) {
                working.erase(working.begin() + drop);
                continue;
            }
        }

        // Then add the most violated row (ties: lowest row index).
        int add = -1;
        double worst_violation = tau_feas;
        for (int i = 0; i < s; ++i) {
            if (std::binary_search(working.begin(), working.end(), i)) continue;
            const double violation = A.row(i).dot(ws.z) - b(i);
            if (violation > worst_violation) {
                worst_violation = violation;
                add = i;
            }
        }
        if (add < 0) {
            if (working.empty()) return {z_u, {}, MatrixXd(q, 0), VectorXd(0)};
            return {ws.z, working, ws.gamma, ws.lambda};
        }

        const int r = static_cast<int>(working.size());
        MatrixXd At(q, r + 1);
        for (int i = 0; i < r; ++i)
            At.col(i) = A.row(working[static_cast<std::size_t>(i)]).transpose();
        At.col(r) = A.row(add).transpose();
        Eigen::ColPivHouseholderQR<MatrixXd> qr(At);
        if (static_cast<int>(qr.rank()) == r + 1) {
            working.insert(std::upper_bound(working.begin(), working.end(), add),
                           add);
            continue;
        }

        // Dependent candidate: a_add = Abar^T alpha over the working rows.
        // Release the working row minimizing lambda_i/alpha_i over alpha_i > 0
        // (ties: lowest row index) and admit the candidate in its place.
        const VectorXd alpha = ws.gamma.transpose() * A.row(add).transpose();
        const double alpha_tol =
            1e-12 * (1.0 + (r > 0 ? alpha.cwiseAbs().maxCoeff() : 0.0));
        int release = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < alpha.size(); ++i) {
            if (alpha(i) <= alpha_tol) continue;
            const double ratio = ws.lambda(i) / alpha(i);
            if (ratio < best_ratio) {
                best_ratio = ratio;
                release = i;
            }
        }
        if (release < 0) throw InfeasibleError("constraint region is empty");
        working.erase(working.begin() + release);
        working.insert(std::upper_bound(working.begin(), working.end(), add),
                       add);
    }

    if (classify_on_cap && !region_feasible(A, b))
        throw InfeasibleError("constraint region is empty");
    throw ConvergenceError(
        "active-set iteration cap exceeded; constraint geometry is degenerate");
}

Eigen::LLT<MatrixXd> checked_llt(const MatrixXd& W) {
    const int q = static_cast<int>(W.rows());
    if (W.cols() != q || q == 0)
        throw ArgumentError("weight matrix must be square and non-empty");
    if (!W.allFinite()) throw ArgumentError("weight matrix has non-finite entries");
    const double asym = (W - W.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * std::max(1.0, W.cwiseAbs().maxCoeff()))
        throw ArgumentError("weight matrix must be symmetric");
    Eigen::LLT<MatrixXd> llt(symmetrize(W));
    if (llt.info() != Eigen::Success)
        throw ArgumentError("weight matrix must be positive definite");
    return llt;
}

}  // namespace

ProjectionResult project(const VectorXd& z_u, const MatrixXd& W,
                         const MatrixXd& A, const VectorXd& b) {
    const int q = static_cast<int>(z_u.size());
    if (q == 0) throw ArgumentError("projection point must be non-empty");
    if (!z_u.allFinite()) throw ArgumentError("projection point has non-finite entries");
    if (W.rows() != q) throw ArgumentError("weight dimension mismatch");
    if (A.rows() != b.size()) throw ArgumentError("constraint row counts differ");
    if (A.rows() > 0 && A.cols() != q)
        throw ArgumentError("constraint column count must match the point");
    if (A.rows() > 0 && !(A.allFinite() && b.allFinite()))
        throw ArgumentError("constraints have non-finite entries");

    Eigen::LLT<MatrixXd> W_llt = checked_llt(W);
    return active_set_solve(z_u, W_llt, A, b, /*classify_on_cap=*/true);
}

MatrixXd gamma_matrix(const MatrixXd& W_inv, const MatrixXd& A_bar) {
    const int q = static_cast<int>(W_inv.rows());
    if (W_inv.cols() != q) throw ArgumentError("inverse weight must be square");
    if (A_bar.rows() == 0) return MatrixXd(q, 0);
    if (A_bar.cols() != q) throw ArgumentError("active-row column count mismatch");
    const MatrixXd WinvAt = W_inv * A_bar.transpose();
    const MatrixXd S = symmetrize(A_bar * WinvAt);
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw SingularityError("active rows are not linearly independent");
    return WinvAt * llt.solve(MatrixXd::Identity(S.rows(), S.cols()));
}

MatrixXd project_covariance(const MatrixXd& P, const MatrixXd& gamma,
                            const MatrixXd& A_bar) {
    const int q = static_cast<int>(P.rows());
    if (P.cols() != q) throw ArgumentError("covariance must be square");
    if (gamma.cols() != A_bar.rows())
        throw ArgumentError("gamma and active-row counts differ");
    if (A_bar.rows() == 0) return P;
    if (gamma.rows() != q || A_bar.cols() != q)
        throw ArgumentError("projected covariance dimension mismatch");
    const MatrixXd F = MatrixXd::Identity(q, q) - gamma * A_bar;
    return symmetrize(F * P * F.transpose());
}

bool region_feasible(const MatrixXd& A, const VectorXd& b) {
    const int s = static_cast<int>(A.rows());
    if (s == 0) return true;
    if (A.rows() != b.size()) throw ArgumentError("constraint row counts differ");
    const int q = static_cast<int>(A.cols());
    if (q == 0) throw ArgumentError("constraints must have at least one column");

    // Minimize (t - t_lo)^2 + eps ||z - z0||^2 over { A z - t 1 <= b, t >= 0 }.
    // The augmented region is always non-empty, and the optimum drives t to
    // (approximately) the least achievable worst violation. A second pass
    // recentered at the stage-one z removes the eps-induced bias.
    const double b_scale = 1.0 + b.cwiseAbs().maxCoeff();
    const double t_lo = -b_scale;
    const double tol = 1e-7 * b_scale;
    const double eps = 1e-8;

    MatrixXd A_aug(s + 1, q + 1);
    A_aug.setZero();
    A_aug.block(0, 0, s, q) = A;
    A_aug.col(q).head(s).setConstant(-1.0);
    A_aug(s, q) = -1.0;
    VectorXd b_aug(s + 1);
    b_aug.head(s) = b;
    b_aug(s) = 0.0;

    MatrixXd W = MatrixXd::Identity(q + 1, q + 1) * eps;
    W(q, q) = 1.0;
    Eigen::LLT<MatrixXd> W_llt(W);

    VectorXd center = VectorXd::Zero(q + 1);
    center(q) = t_lo;
    for (int stage = 0; stage < 2; ++stage) {
        ProjectionResult res =
            active_set_solve(center, W_llt, A_aug, b_aug, /*classify_on_cap=*/false);
        if (res.z(q) <= tol) return true;
        center.head(q) = res.z.head(q);
    }
    return false;
}

}  // namespace crest
