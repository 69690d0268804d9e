#include "crest/filter.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "crest/linalg.hpp"
#include "crest/projection.hpp"

namespace crest {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

// Rethrows the in-flight library error with step/stage context, keeping its
// dynamic type so CLI exit-code mapping still sees the category.
[[noreturn]] void rethrow_with_context(const std::string& ctx) {
    try {
        throw;
    } catch (const ArgumentError& e) {
        throw ArgumentError(ctx + e.what());
    } catch (const SingularityError& e) {
        throw SingularityError(ctx + e.what());
    } catch (const InfeasibleError& e) {
        throw InfeasibleError(ctx + e.what());
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(ctx + e.what());
    } catch (const Error& e) {
        throw NumericalError(ctx + e.what());
    }
}

}  // namespace

Prediction predict(const FilterState& state, const SystemStep& prev,
                   const VectorXd& u) {
    require(state.x_hat.size() == prev.n(), "state dimension mismatch");
    require(state.P_x.rows() == prev.n() && state.P_x.cols() == prev.n(),
            "state covariance dimension mismatch");
    require(u.size() == prev.m(), "input dimension mismatch");
    Prediction out;
    out.x_pred = prev.A * state.x_hat + prev.B * u;
    out.P_pred = symmetrize(prev.A * state.P_x * prev.A.transpose() + prev.Q);
    return out;
}

AttackEstimate estimate_attack(const VectorXd& x_pred, const MatrixXd& P_pred,
                               const MatrixXd& P_x_prev, const SystemStep& prev,
                               const SystemStep& cur, const VectorXd& y) {
    require(x_pred.size() == cur.n(), "prediction dimension mismatch");
    require(P_pred.rows() == cur.n() && P_pred.cols() == cur.n(),
            "prediction covariance dimension mismatch");
    require(P_x_prev.rows() == cur.n() && P_x_prev.cols() == cur.n(),
            "previous covariance dimension mismatch");
    require(y.size() == cur.l(), "measurement dimension mismatch");

    AttackEstimate out;
    out.R_tilde = symmetrize(cur.C * P_pred * cur.C.transpose() + cur.R);
    Eigen::LLT<MatrixXd> rt_llt(out.R_tilde);
    if (rt_llt.info() != Eigen::Success)
        throw SingularityError("residual covariance R_tilde is not positive definite");

    const MatrixXd CG = cur.C * prev.G;                  // l x p
    const MatrixXd Rinv_CG = rt_llt.solve(CG);           // l x p
    const MatrixXd F = symmetrize(CG.transpose() * Rinv_CG);  // p x p

    Eigen::FullPivLU<MatrixXd> lu(F);
    if (!lu.isInvertible())
        throw SingularityError(
            "attack estimator does not exist: rank(C_k G_{k-1}) < p");
    out.P_du = symmetrize(lu.inverse());
    out.M = out.P_du * Rinv_CG.transpose();              // p x l
    out.d_hat_u = out.M * (y - cur.C * x_pred);
    out.P_xd = -P_x_prev * prev.A.transpose() * cur.C.transpose() *
               out.M.transpose();
    return out;
}

ConstrainedEstimate constrain_attack(const VectorXd& d_hat_u,
                                     const MatrixXd& P_du, const MatrixXd& A_d,
                                     const VectorXd& b_d) {
    const int p = static_cast<int>(d_hat_u.size());
    require(P_du.rows() == p && P_du.cols() == p,
            "attack covariance dimension mismatch");
    if (A_d.rows() == 0)
        return {d_hat_u, P_du, {}, MatrixXd(p, 0)};
    require(A_d.cols() == p, "attack constraint column count mismatch");

    const MatrixXd W = inverse_weight(P_du);
    ProjectionResult res = project(d_hat_u, W, A_d, b_d);
    MatrixXd A_bar(static_cast<int>(res.active.size()), p);
    for (std::size_t i = 0; i < res.active.size(); ++i)
        A_bar.row(static_cast<int>(i)) = A_d.row(res.active[i]);
    const MatrixXd P_proj = project_covariance(P_du, res.gamma, A_bar);
    return {res.z, P_proj, res.active, res.gamma};
}

TimeUpdate time_update(const VectorXd& x_pred, const VectorXd& d_used,
                       const MatrixXd& P_x_prev, const MatrixXd& P_xd,
                       const MatrixXd& P_d, const SystemStep& prev,
                       const SystemStep& cur, const MatrixXd& M) {
    require(d_used.size() == prev.p(), "attack estimate dimension mismatch");
    require(P_xd.rows() == prev.n() && P_xd.cols() == prev.p(),
            "cross covariance dimension mismatch");
    require(P_d.rows() == prev.p() && P_d.cols() == prev.p(),
            "attack covariance dimension mismatch");
    require(M.rows() == prev.p() && M.cols() == cur.l(),
            "attack gain dimension mismatch");

    const MatrixXd& A = prev.A;
    const MatrixXd& G = prev.G;
    const MatrixXd& Q = prev.Q;
    const MatrixXd& C = cur.C;
    const MatrixXd& R = cur.R;

    TimeUpdate out;
    out.x_star = x_pred + G * d_used;
    const MatrixXd GMCQ = G * M * C * Q;
    out.P_star = symmetrize(A * P_x_prev * A.transpose() +
                            A * P_xd * G.transpose() +
                            G * P_xd.transpose() * A.transpose() +
                            G * P_d * G.transpose() - GMCQ - GMCQ.transpose() + Q);
    const MatrixXd CGMR = C * G * M * R;
    out.R_star = symmetrize(C * out.P_star * C.transpose() + R - CGMR -
                            CGMR.transpose());
    return out;
}

MeasurementUpdate measurement_update(const VectorXd& x_star,
                                     const MatrixXd& P_star,
                                     const MatrixXd& R_star,
                                     const SystemStep& prev,
                                     const SystemStep& cur, const MatrixXd& M,
                                     const VectorXd& y) {
    const int n = cur.n();
    const int l = cur.l();
    require(x_star.size() == n, "time-update estimate dimension mismatch");
    require(P_star.rows() == n && P_star.cols() == n,
            "time-update covariance dimension mismatch");
    require(R_star.rows() == l && R_star.cols() == l,
            "residual covariance dimension mismatch");
    require(y.size() == l, "measurement dimension mismatch");

    if (!R_star.allFinite())
        throw NumericalError(
            "R_star has non-finite entries; the covariance recursion lost "
            "consistency");

    // R_star is the one covariance in the recursion that is not a quadratic
    // form: at steps where the constrained attack covariance feeds the time
    // update it carries genuinely negative eigenvalues (the cross terms still
    // encode the unconstrained estimator). The gain uses the true symmetric
    // pseudoinverse — negative eigenvalues invert with their sign — which
    // makes the update identity P_xu = P_star - U pinv(R_star) U^T add the
    // clamped-away variance back, so the posterior covariance recovers
    // positive semidefiniteness. Eigenvalues at machine noise relative to the
    // innovation scale are truncated; R_star's own largest eigenvalue is not
    // a safe anchor because it can be legitimately zero.
    const MatrixXd CPC = cur.C * P_star * cur.C.transpose();
    const double anchor = R_star.cwiseAbs().maxCoeff() +
                          cur.R.cwiseAbs().maxCoeff() +
                          CPC.cwiseAbs().maxCoeff();
    const double tau_pinv =
        8.0 * l * std::numeric_limits<double>::epsilon() * anchor;
    auto es = eig_sym(R_star);
    const VectorXd& ev = es.eigenvalues();
    VectorXd ev_inv = VectorXd::Zero(l);
    for (int i = 0; i < l; ++i)
        if (std::abs(ev(i)) > tau_pinv) ev_inv(i) = 1.0 / ev(i);
    const MatrixXd R_star_pinv = symmetrize(
        es.eigenvectors() * ev_inv.asDiagonal() * es.eigenvectors().transpose());
    const MatrixXd GMR = prev.G * M * cur.R;  // n x l
    MeasurementUpdate out;
    out.L = (P_star * cur.C.transpose() - GMR) * R_star_pinv;
    out.x_hat_u = x_star + out.L * (y - cur.C * x_star);
    const MatrixXd IKC = MatrixXd::Identity(n, n) - out.L * cur.C;
    const MatrixXd cross = IKC * GMR * out.L.transpose();
    out.P_xu = symmetrize(IKC * P_star * IKC.transpose() + cross +
                          cross.transpose() +
                          out.L * cur.R * out.L.transpose());
    return out;
}

ConstrainedEstimate constrain_state(const VectorXd& x_hat_u,
                                    const MatrixXd& P_xu, const MatrixXd& B_x,
                                    const VectorXd& c_x) {
    const int n = static_cast<int>(x_hat_u.size());
    require(P_xu.rows() == n && P_xu.cols() == n,
            "state covariance dimension mismatch");
    if (B_x.rows() == 0)
        return {x_hat_u, P_xu, {}, MatrixXd(n, 0)};
    require(B_x.cols() == n, "state constraint column count mismatch");

    const MatrixXd W = inverse_weight(P_xu);
    ProjectionResult res = project(x_hat_u, W, B_x, c_x);
    MatrixXd B_bar(static_cast<int>(res.active.size()), n);
    for (std::size_t i = 0; i < res.active.size(); ++i)
        B_bar.row(static_cast<int>(i)) = B_x.row(res.active[i]);
    const MatrixXd P_proj = project_covariance(P_xu, res.gamma, B_bar);
    return {res.z, P_proj, res.active, res.gamma};
}

MatrixXd transformed_transition(const SystemStep& prev, const SystemStep& cur,
                                const MatrixXd& M, const MatrixXd& gamma_x_prev,
                                const MatrixXd& B_bar_prev) {
    const int n = cur.n();
    require(M.rows() == prev.p() && M.cols() == cur.l(),
            "attack gain dimension mismatch");
    require(gamma_x_prev.cols() == B_bar_prev.rows(),
            "projection gain and active-row counts differ");

    MatrixXd Gbar = MatrixXd::Identity(n, n);
    if (B_bar_prev.rows() > 0) {
        require(gamma_x_prev.rows() == n && B_bar_prev.cols() == n,
                "state projection dimension mismatch");
        Gbar -= gamma_x_prev * B_bar_prev;
    }

    const MatrixXd Abar =
        (MatrixXd::Identity(n, n) - prev.G * M * cur.C) * prev.A;
    // T = C_k G_{k-1} M_k is l x l but can never exceed rank p; the
    // decoupling gain only needs its action on the attack subspace, so the
    // pseudoinverse is exact whenever T reaches that maximal rank.
    const MatrixXd T = cur.C * prev.G * M;
    if (numerical_rank(T) < prev.p())
        throw SingularityError(
            "transformed transition does not exist: rank(C_k G_{k-1} M_k) "
            "fell below the attack dimension");
    const MatrixXd K =
        cur.G * M * T.completeOrthogonalDecomposition().pseudoInverse();
    return (MatrixXd::Identity(n, n) - K * cur.C) * Abar * Gbar;
}

FilterState initial_state(const SystemStep& step0, const VectorXd& y0,
                          double p0_scale) {
    require(y0.size() == step0.l(), "first measurement dimension mismatch");
    require(p0_scale > 0.0, "initial covariance scale must be positive");
    FilterState st;
    st.k = 0;
    st.P_x = p0_scale * MatrixXd::Identity(step0.n(), step0.n());
    st.x_hat = VectorXd::Zero(step0.n());
    if (step0.l() == step0.n()) {
        Eigen::FullPivLU<MatrixXd> lu(step0.C);
        if (lu.isInvertible()) st.x_hat = lu.solve(y0);
    }
    return st;
}

Filter::Filter(FilterState init, FilterOptions opt)
    : state_(std::move(init)), options_(opt) {
    require(state_.x_hat.size() > 0, "filter state must be non-empty");
    require(state_.P_x.rows() == state_.x_hat.size() &&
                state_.P_x.cols() == state_.x_hat.size(),
            "filter covariance dimension mismatch");
}

StepOutput Filter::step(const SystemStep& prev, const SystemStep& cur,
                        const VectorXd& u, const VectorXd& y,
                        const ConstraintSet& cs) {
    const std::string where =
        "step " + std::to_string(state_.k + 1) + ", stage ";
    StepOutput out;

    try {
        Prediction pr = predict(state_, prev, u);
        out.x_pred = std::move(pr.x_pred);
        out.P_pred = std::move(pr.P_pred);
    } catch (const Error&) {
        rethrow_with_context(where + "predict: ");
    }

    try {
        AttackEstimate ae =
            estimate_attack(out.x_pred, out.P_pred, state_.P_x, prev, cur, y);
        out.R_tilde = std::move(ae.R_tilde);
        out.M = std::move(ae.M);
        out.d_hat_u = std::move(ae.d_hat_u);
        out.P_du = std::move(ae.P_du);
        out.P_xd = std::move(ae.P_xd);
    } catch (const Error&) {
        rethrow_with_context(where + "estimate_attack: ");
    }

    try {
        ConstrainedEstimate cd =
            constrain_attack(out.d_hat_u, out.P_du, cs.A_d, cs.b_d);
        out.d_hat = std::move(cd.z);
        out.P_d = std::move(cd.P);
        out.active_d = std::move(cd.active);
    } catch (const Error&) {
        rethrow_with_context(where + "constrain_attack: ");
    }

    try {
        const VectorXd& d_used =
            options_.time_update_attack == TimeUpdateAttack::kConstrained
                ? out.d_hat
                : out.d_hat_u;
        TimeUpdate tu = time_update(out.x_pred, d_used, state_.P_x, out.P_xd,
                                    out.P_d, prev, cur, out.M);
        out.x_star = std::move(tu.x_star);
        out.P_star = std::move(tu.P_star);
        out.R_star = std::move(tu.R_star);
    } catch (const Error&) {
        rethrow_with_context(where + "time_update: ");
    }

    try {
        MeasurementUpdate mu = measurement_update(out.x_star, out.P_star,
                                                  out.R_star, prev, cur, out.M, y);
        out.L = std::move(mu.L);
        out.x_hat_u = std::move(mu.x_hat_u);
        out.P_xu = std::move(mu.P_xu);
    } catch (const Error&) {
        rethrow_with_context(where + "measurement_update: ");
    }

    try {
        ConstrainedEstimate cx =
            constrain_state(out.x_hat_u, out.P_xu, cs.B_x, cs.c_x);
        out.x_hat = std::move(cx.z);
        out.P_x = std::move(cx.P);
        out.active_x = std::move(cx.active);
    } catch (const Error&) {
        rethrow_with_context(where + "constrain_state: ");
    }

    state_.x_hat = out.x_hat;
    state_.P_x = out.P_x;
    state_.k += 1;
    return out;
}

}  // namespace crest
