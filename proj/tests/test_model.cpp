#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "crest/errors.hpp"
#include "crest/model.hpp"
#include "crest/scenario.hpp"

using crest::MatrixXd;
using crest::VectorXd;

namespace {

crest::SystemStep simple_step(int n = 2) {
    return crest::SystemStep(MatrixXd::Identity(n, n), MatrixXd::Zero(n, 1),
                             MatrixXd::Identity(n, n), MatrixXd::Identity(n, 1),
                             MatrixXd::Identity(n, n), MatrixXd::Identity(n, n));
}

}  // namespace

TEST_CASE("SystemStep validates dimensions and finiteness") {
    CHECK_NOTHROW(simple_step());
    // C with the wrong column count.
    CHECK_THROWS_AS(crest::SystemStep(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 1),
                                      MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 1),
                                      MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)),
                    crest::ArgumentError);
    // Non-square A.
    CHECK_THROWS_AS(crest::SystemStep(MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 1),
                                      MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 1),
                                      MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)),
                    crest::ArgumentError);
    // NaN entry.
    MatrixXd bad = MatrixXd::Identity(2, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(crest::SystemStep(bad, MatrixXd::Zero(2, 1),
                                      MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 1),
                                      MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)),
                    crest::ArgumentError);
    const crest::SystemStep s = simple_step(3);
    CHECK(s.n() == 3);
    CHECK(s.m() == 1);
    CHECK(s.p() == 1);
    CHECK(s.l() == 3);
}

TEST_CASE("ModelProvider holds the last step for indices past the end") {
    crest::SystemStep a = simple_step();
    crest::SystemStep b = simple_step();
    b.A *= 2.0;
    const auto provider = crest::ModelProvider::sequence({a, b});
    CHECK(provider.at(0).A(0, 0) == 1.0);
    CHECK(provider.at(1).A(0, 0) == 2.0);
    CHECK(provider.at(5).A(0, 0) == 2.0);  // clamped to the last step
    CHECK_FALSE(provider.is_constant());

    const auto constant = crest::ModelProvider::constant(a);
    CHECK(constant.is_constant());
    CHECK(constant.at(100).A(0, 0) == 1.0);
}

TEST_CASE("ModelProvider rejects dimension changes across steps") {
    CHECK_THROWS_AS(crest::ModelProvider::sequence({simple_step(2), simple_step(3)}),
                    crest::StructuralError);
    CHECK_THROWS_AS(crest::ModelProvider::sequence({}), crest::ArgumentError);
}

TEST_CASE("validate_model passes the one-agent system") {
    // C = identity, G = the double-integrator input map: rank(CG) = 2 = p.
    const auto provider = crest::scenario::build_multiagent(1);
    const auto report = crest::validate_model(provider, 5);
    CHECK(report.pass);
    CHECK_FALSE(report.summary().empty());
}

TEST_CASE("validate_model flags rank(CG) < p at every step") {
    crest::SystemStep s = simple_step(2);
    s.C = MatrixXd::Zero(2, 2);  // output map annihilates the attack channel
    const auto provider = crest::ModelProvider::constant(s);
    const auto report = crest::validate_model(provider, 3);
    CHECK_FALSE(report.pass);
    int rank_failures = 0;
    for (const auto& e : report.entries)
        if (!e.pass && e.check == "rank(C_k G_{k-1}) = p") ++rank_failures;
    CHECK(rank_failures == 3);
}

TEST_CASE("validate_model flags duplicated attack columns") {
    crest::SystemStep s = simple_step(2);
    MatrixXd g(2, 2);
    g << 1, 1, 2, 2;  // two identical columns: rank 1 < p = 2
    s.G = g;
    const auto report =
        crest::validate_model(crest::ModelProvider::constant(s), 1);
    CHECK_FALSE(report.pass);
}

TEST_CASE("validate_model flags indefinite R and Q") {
    crest::SystemStep s = simple_step(2);
    s.R = MatrixXd::Zero(2, 2);  // PSD but not PD
    CHECK_FALSE(crest::validate_model(crest::ModelProvider::constant(s), 1).pass);

    crest::SystemStep s2 = simple_step(2);
    s2.Q(0, 0) = -1.0;
    CHECK_FALSE(crest::validate_model(crest::ModelProvider::constant(s2), 1).pass);
}

TEST_CASE("ConstraintSet::none carries dimensions with zero rows") {
    const auto cs = crest::ConstraintSet::none(3, 5);
    CHECK(cs.attack_rows() == 0);
    CHECK(cs.state_rows() == 0);
    CHECK(cs.A_d.cols() == 3);
    CHECK(cs.B_x.cols() == 5);
}

TEST_CASE("validate_constraints: empty blocks pass") {
    CHECK(crest::validate_constraints(crest::ConstraintSet::none(2, 4)).pass);
}

TEST_CASE("validate_constraints: contradictory bounds fail") {
    // x <= 1 and -x <= -2 cannot both hold.
    MatrixXd a(2, 1);
    a << 1, -1;
    VectorXd b(2);
    b << 1, -2;
    const crest::ConstraintSet cs(a, b, MatrixXd(0, 1), VectorXd(0));
    const auto report = crest::validate_constraints(cs);
    CHECK_FALSE(report.pass);
}

TEST_CASE("validate_constraints: full-rank state block fails the rank check") {
    const int n = 3;
    const crest::ConstraintSet cs(MatrixXd(0, 1), VectorXd(0),
                                  MatrixXd::Identity(n, n), VectorXd::Ones(n));
    const auto report = crest::validate_constraints(cs);
    CHECK_FALSE(report.pass);
    bool rank_entry = false;
    for (const auto& e : report.entries)
        if (!e.pass && e.check == "rank(B_x) < n") rank_entry = true;
    CHECK(rank_entry);
}

TEST_CASE("validate_constraints: feasible low-rank state block passes") {
    MatrixXd bx(2, 3);
    bx << 1, 0, 0, 0, 1, 0;
    const crest::ConstraintSet cs(MatrixXd(0, 2), VectorXd(0), bx,
                                  VectorXd::Ones(2));
    CHECK(crest::validate_constraints(cs).pass);
}
