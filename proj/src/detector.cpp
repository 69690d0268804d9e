#include "crest/detector.hpp"

#include <cmath>
#include <limits>

#include "crest/linalg.hpp"

namespace crest {

namespace {

// Regularized lower incomplete gamma P(a, x) by series expansion; valid and
// fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by modified Lentz continued
// fraction; valid and fast for x >= a + 1.
double gamma_q_contfrac(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), a > 0, x >= 0.
double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

}  // namespace

double chi2_tail(int dof, double x) {
    if (dof < 1) throw ArgumentError("degrees of freedom must be >= 1");
    if (!(x >= 0.0)) throw ArgumentError("chi2_tail requires x >= 0");
    return gamma_q(0.5 * dof, 0.5 * x);
}

double chi2_threshold(int dof, double alpha) {
    if (dof < 1) throw ArgumentError("degrees of freedom must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ArgumentError("alpha must lie strictly inside (0, 1)");

    // Bracket the quantile, then bisect chi2_tail(x) = alpha. The tail is
    // strictly decreasing in x, so plain bisection is exact and robust.
    double lo = 0.0;
    double hi = std::max(1.0, 2.0 * dof);
    while (chi2_tail(dof, hi) > alpha) {
        hi *= 2.0;
        if (hi > 1e12)
            throw NumericalError("chi-squared quantile bracket failed");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_tail(dof, mid) > alpha)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-10 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

double chi2_statistic(const VectorXd& d_hat, const MatrixXd& P_d,
                      bool* degenerate) {
    const int p = static_cast<int>(d_hat.size());
    if (p == 0) throw ArgumentError("attack estimate must be non-empty");
    if (P_d.rows() != p || P_d.cols() != p)
        throw ArgumentError("attack covariance dimension mismatch");
    if (!d_hat.allFinite() || !P_d.allFinite())
        throw ArgumentError("detector inputs must be finite");

    auto es = eig_sym(P_d);
    const VectorXd& ev = es.eigenvalues();
    const double lmax = std::max(0.0, ev(p - 1));
    const double tau = p * std::numeric_limits<double>::epsilon() * lmax;

    double stat = 0.0;
    int rank = 0;
    for (int i = 0; i < p; ++i) {
        if (ev(i) > tau) {
            const double proj = es.eigenvectors().col(i).dot(d_hat);
            stat += proj * proj / ev(i);
            ++rank;
        }
    }
    if (degenerate) *degenerate = rank < p;
    return stat;
}

DetectionResult detect(const VectorXd& d_hat, const MatrixXd& P_d, double alpha) {
    DetectionResult res;
    res.dof = static_cast<int>(d_hat.size());
    res.alpha = alpha;
    res.statistic = chi2_statistic(d_hat, P_d, &res.degenerate);
    res.threshold = chi2_threshold(res.dof, alpha);
    res.attacked = res.statistic > res.threshold;
    return res;
}

}  // namespace crest
