#include "crest/model.hpp"

#include <sstream>
#include <utility>

#include "crest/linalg.hpp"
#include "crest/projection.hpp"

namespace crest {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

}  // namespace

SystemStep::SystemStep(MatrixXd A_, MatrixXd B_, MatrixXd C_, MatrixXd G_,
                       MatrixXd Q_, MatrixXd R_)
    : A(std::move(A_)),
      B(std::move(B_)),
      C(std::move(C_)),
      G(std::move(G_)),
      Q(std::move(Q_)),
      R(std::move(R_)) {
    const auto nn = A.rows();
    require(nn > 0 && A.cols() == nn, "A must be square and non-empty");
    require(B.rows() == nn, "B row count must equal the state dimension");
    require(B.cols() > 0, "B must have at least one column");
    require(C.cols() == nn, "C column count must equal the state dimension");
    require(C.rows() > 0, "C must have at least one row");
    require(G.rows() == nn, "G row count must equal the state dimension");
    require(G.cols() > 0, "G must have at least one column");
    require(Q.rows() == nn && Q.cols() == nn, "Q must be n x n");
    require(R.rows() == C.rows() && R.cols() == C.rows(), "R must be l x l");
    require(A.allFinite() && B.allFinite() && C.allFinite() && G.allFinite() &&
                Q.allFinite() && R.allFinite(),
            "system matrices must have finite entries");
}

ModelProvider::ModelProvider(std::vector<SystemStep> steps)
    : steps_(std::move(steps)) {
    require(!steps_.empty(), "model sequence must not be empty");
    const SystemStep& first = steps_.front();
    for (const SystemStep& s : steps_) {
        if (s.n() != first.n() || s.m() != first.m() || s.p() != first.p() ||
            s.l() != first.l())
            throw StructuralError("model sequence changes dimensions across steps");
    }
}

ModelProvider ModelProvider::constant(SystemStep step) {
    std::vector<SystemStep> v;
    v.push_back(std::move(step));
    return ModelProvider(std::move(v));
}

ModelProvider ModelProvider::sequence(std::vector<SystemStep> steps) {
    return ModelProvider(std::move(steps));
}

const SystemStep& ModelProvider::at(int k) const {
    if (k < 0) throw ArgumentError("step index must be nonnegative");
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k),
                                           steps_.size() - 1);
    return steps_[idx];
}

ConstraintSet::ConstraintSet(MatrixXd A_d_, VectorXd b_d_, MatrixXd B_x_,
                             VectorXd c_x_)
    : A_d(std::move(A_d_)),
      b_d(std::move(b_d_)),
      B_x(std::move(B_x_)),
      c_x(std::move(c_x_)) {
    require(A_d.rows() == b_d.size(), "attack block: row counts of A_d and b_d differ");
    require(B_x.rows() == c_x.size(), "state block: row counts of B_x and c_x differ");
    require(A_d.rows() == 0 || A_d.cols() > 0, "attack block has rows but no columns");
    require(B_x.rows() == 0 || B_x.cols() > 0, "state block has rows but no columns");
    require(A_d.allFinite() && b_d.allFinite() && B_x.allFinite() && c_x.allFinite(),
            "constraint entries must be finite");
}

ConstraintSet ConstraintSet::none(int p, int n) {
    return ConstraintSet(MatrixXd(0, p), VectorXd(0), MatrixXd(0, n), VectorXd(0));
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << " (" << entries.size() << " checks)";
    for (const ValidationEntry& e : entries) {
        if (e.pass) continue;
        os << "\n  k=" << e.k << " " << e.check << ": " << e.detail;
    }
    return os.str();
}

ValidationReport validate_model(const ModelProvider& model, int horizon) {
    if (horizon < 1) throw ArgumentError("validation horizon must be >= 1");
    ValidationReport report;
    auto add = [&](int k, const std::string& check, bool pass,
                   const std::string& detail) {
        report.entries.push_back({k, check, pass, detail});
        report.pass = report.pass && pass;
    };
    for (int k = 1; k <= horizon; ++k) {
        const SystemStep& prev = model.at(k - 1);
        const SystemStep& cur = model.at(k);
        if (prev.n() != cur.n() || prev.m() != cur.m() || prev.p() != cur.p() ||
            prev.l() != cur.l())
            throw StructuralError("model dimensions change between steps " +
                                  std::to_string(k - 1) + " and " +
                                  std::to_string(k));

        const int rank_cg = numerical_rank(cur.C * prev.G);
        add(k, "rank(C_k G_{k-1}) = p", rank_cg == cur.p(),
            "rank " + std::to_string(rank_cg) + " of required " +
                std::to_string(cur.p()));

        const double r_asym = (cur.R - cur.R.transpose()).cwiseAbs().maxCoeff();
        const double r_scale = std::max(1.0, cur.R.cwiseAbs().maxCoeff());
        const bool r_sym = r_asym <= 1e-12 * r_scale;
        add(k, "R_k symmetric positive definite", r_sym && is_pd(cur.R),
            r_sym ? "minimum eigenvalue " + std::to_string(min_eig_sym(cur.R))
                  : "R is not symmetric");

        const double q_asym = (cur.Q - cur.Q.transpose()).cwiseAbs().maxCoeff();
        const double q_scale = std::max(1.0, cur.Q.cwiseAbs().maxCoeff());
        const bool q_sym = q_asym <= 1e-12 * q_scale;
        add(k, "Q_k symmetric positive semidefinite", q_sym && is_psd(cur.Q),
            q_sym ? "minimum eigenvalue " + std::to_string(min_eig_sym(cur.Q))
                  : "Q is not symmetric");
    }
    return report;
}

ValidationReport validate_constraints(const ConstraintSet& cs) {
    ValidationReport report;
    auto add = [&](const std::string& check, bool pass, const std::string& detail) {
        report.entries.push_back({-1, check, pass, detail});
        report.pass = report.pass && pass;
    };
    if (cs.attack_rows() > 0) {
        const bool feas = region_feasible(cs.A_d, cs.b_d);
        add("attack block feasible", feas,
            feas ? "phase-1 solve found a feasible point"
                 : "attack inequalities are contradictory");
    }
    if (cs.state_rows() > 0) {
        const bool feas = region_feasible(cs.B_x, cs.c_x);
        add("state block feasible", feas,
            feas ? "phase-1 solve found a feasible point"
                 : "state inequalities are contradictory");
        const int n = static_cast<int>(cs.B_x.cols());
        const int rank_bx = numerical_rank(cs.B_x);
        add("rank(B_x) < n", rank_bx < n,
            "rank " + std::to_string(rank_bx) + " against state dimension " +
                std::to_string(n));
    }
    return report;
}

}  // namespace crest
