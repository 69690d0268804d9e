#include "support/oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crest::test {
namespace {

// Candidate for one equality subset S: minimize (z-z_u)' W (z-z_u) subject
// to A_S z = b_S via the KKT system, solved with a rank-revealing
// decomposition so rank-deficient subsets yield their least-squares point.
// Returns false when the subset is inconsistent (A_S z != b_S).
bool equality_candidate(const Eigen::VectorXd& z_u, const Eigen::MatrixXd& W,
                        const Eigen::MatrixXd& A_s, const Eigen::VectorXd& b_s,
                        Eigen::VectorXd& z_out) {
    const int q = static_cast<int>(z_u.size());
    const int r = static_cast<int>(A_s.rows());
    if (r == 0) {
        z_out = z_u;
        return true;
    }
    Eigen::MatrixXd kkt(q + r, q + r);
    kkt.setZero();
    kkt.topLeftCorner(q, q) = 2.0 * W;
    kkt.topRightCorner(q, r) = A_s.transpose();
    kkt.bottomLeftCorner(r, q) = A_s;
    Eigen::VectorXd rhs(q + r);
    rhs.head(q) = 2.0 * W * z_u;
    rhs.tail(r) = b_s;
    const Eigen::VectorXd sol =
        kkt.completeOrthogonalDecomposition().solve(rhs);
    z_out = sol.head(q);
    const double scale = 1.0 + b_s.cwiseAbs().maxCoeff();
    return (A_s * z_out - b_s).cwiseAbs().maxCoeff() <= 1e-7 * scale;
}

}  // namespace

BruteForceResult brute_force_project(const Eigen::VectorXd& z_u,
                                     const Eigen::MatrixXd& W,
                                     const Eigen::MatrixXd& A,
                                     const Eigen::VectorXd& b) {
    const int s = static_cast<int>(A.rows());
    if (s > 12) throw std::invalid_argument("brute_force_project: too many rows");

    const double b_scale = s > 0 ? 1.0 + b.cwiseAbs().maxCoeff() : 1.0;
    const double tol_feas = 1e-9 * b_scale;

    BruteForceResult best;
    best.objective = std::numeric_limits<double>::infinity();

    for (unsigned mask = 0; mask < (1u << s); ++mask) {
        std::vector<int> rows;
        for (int i = 0; i < s; ++i)
            if (mask & (1u << i)) rows.push_back(i);

        Eigen::MatrixXd A_s(rows.size(), z_u.size());
        Eigen::VectorXd b_s(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            A_s.row(static_cast<int>(i)) = A.row(rows[i]);
            b_s(static_cast<int>(i)) = b(rows[i]);
        }

        Eigen::VectorXd z;
        if (!equality_candidate(z_u, W, A_s, b_s, z)) continue;
        if (s > 0 && (A * z - b).maxCoeff() > tol_feas) continue;

        const Eigen::VectorXd diff = z - z_u;
        const double obj = diff.dot(W * diff);
        if (obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
            best.z = z;
            best.active.clear();
            for (int i = 0; i < s; ++i)
                if (std::abs(A.row(i).dot(z) - b(i)) <= tol_feas)
                    best.active.push_back(i);
        }
    }
    if (!best.feasible) best.objective = 0.0;
    return best;
}

namespace {

// Adaptive Simpson on [a, b] with precomputed endpoint/midpoint values.
template <typename F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm,
                       double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return simpson_recurse(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
           simpson_recurse(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double eps) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_recurse(f, a, b, fa, fm, fb, whole, eps, 60);
}

}  // namespace

double chi2_cdf_oracle(int dof, double x) {
    if (x <= 0.0) return 0.0;
    // CDF(x) = c * Int_0^sqrt(x) t^(dof-1) exp(-t^2/2) dt,
    // c = 2 / (2^(dof/2) Gamma(dof/2)).
    const double c =
        2.0 / (std::pow(2.0, 0.5 * dof) * std::tgamma(0.5 * dof));
    const auto integrand = [dof](double t) {
        return std::pow(t, dof - 1) * std::exp(-0.5 * t * t);
    };
    const double integral = adaptive_simpson(integrand, 0.0, std::sqrt(x), 1e-13);
    return std::min(1.0, c * integral);
}

double chi2_quantile_oracle(int dof, double alpha) {
    const double target = 1.0 - alpha;
    double lo = 0.0, hi = 1.0;
    while (chi2_cdf_oracle(dof, hi) < target) hi *= 2.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-10 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (chi2_cdf_oracle(dof, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace crest::test
