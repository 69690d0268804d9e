#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "crest/errors.hpp"
#include "crest/linalg.hpp"
#include "crest/projection.hpp"
#include "support/oracles.hpp"
#include "support/random_gen.hpp"

using crest::MatrixXd;
using crest::VectorXd;

namespace {

VectorXd vec1(double a) {
    VectorXd v(1);
    v << a;
    return v;
}

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("interior point projects to itself with empty active set") {
    MatrixXd a(2, 2);
    a << 1, 0, 0, 1;
    const auto r = crest::project(vec2(0.3, -0.2), MatrixXd::Identity(2, 2), a,
                                  vec2(1.0, 1.0));
    CHECK(r.active.empty());
    // The interior branch must return the input bitwise.
    CHECK(r.z(0) == 0.3);
    CHECK(r.z(1) == -0.2);
    CHECK(r.gamma.cols() == 0);
    CHECK(r.multipliers.size() == 0);
}

TEST_CASE("1-D clamp: z <= 5 from z_u = 7 gives multiplier 4") {
    const auto r = crest::project(vec1(7.0), MatrixXd::Identity(1, 1),
                                  MatrixXd::Ones(1, 1), vec1(5.0));
    CHECK(r.z(0) == doctest::Approx(5.0));
    REQUIRE(r.active.size() == 1);
    CHECK(r.active[0] == 0);
    REQUIRE(r.multipliers.size() == 1);
    // Stationarity 2W(z - z_u) + A^T lambda = 0 gives lambda = 4.
    CHECK(r.multipliers(0) == doctest::Approx(4.0));
}

TEST_CASE("box corner: only the violated row activates") {
    MatrixXd a(2, 2);
    a << 1, 0, 0, 1;  // z1 <= 1, z2 <= 1
    const auto r =
        crest::project(vec2(2.0, 0.5), MatrixXd::Identity(2, 2), a, vec2(1.0, 1.0));
    CHECK(r.z(0) == doctest::Approx(1.0));
    CHECK(r.z(1) == doctest::Approx(0.5));
    REQUIRE(r.active.size() == 1);
    CHECK(r.active[0] == 0);
}

TEST_CASE("weighted projection follows the closed-form gamma") {
    // W = diag(1, 1/4) (covariance diag(1,4)), row x1 + x2 <= 0, z_u = (1,1):
    // gamma = (1,4)/5, z = z_u - gamma * 2 = (3/5, -3/5).
    MatrixXd w = MatrixXd::Zero(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 0.25;
    MatrixXd a(1, 2);
    a << 1, 1;
    const auto r = crest::project(vec2(1.0, 1.0), w, a, vec1(0.0));
    CHECK(r.z(0) == doctest::Approx(0.6));
    CHECK(r.z(1) == doctest::Approx(-0.6));
    CHECK(r.z(0) + r.z(1) == doctest::Approx(0.0));
    REQUIRE(r.gamma.size() == 2);
    CHECK(r.gamma(0, 0) == doctest::Approx(0.2));
    CHECK(r.gamma(1, 0) == doctest::Approx(0.8));
}

TEST_CASE("infeasible region raises InfeasibleError") {
    MatrixXd a(2, 1);
    a << 1, -1;  // z <= 1 and z >= 2
    CHECK_THROWS_AS(crest::project(vec1(0.0), MatrixXd::Identity(1, 1), a,
                                   vec2(1.0, -2.0)),
                    crest::InfeasibleError);
}

TEST_CASE("non-SPD weight raises ArgumentError") {
    MatrixXd w(1, 1);
    w << -1.0;
    CHECK_THROWS_AS(
        crest::project(vec1(0.0), w, MatrixXd::Ones(1, 1), vec1(1.0)),
        crest::ArgumentError);
}

TEST_CASE("duplicate rows are pruned, result unchanged") {
    // The same halfspace twice: the working set is rank deficient the moment
    // both rows activate; pruning must keep the solution identical.
    MatrixXd a(2, 1);
    a << 1, 1;
    VectorXd b(2);
    b << 5, 5;
    const auto r = crest::project(vec1(7.0), MatrixXd::Identity(1, 1), a, b);
    CHECK(r.z(0) == doctest::Approx(5.0));
    // Both rows are tight at the solution.
    CHECK(r.active.size() >= 1);
    for (int row : r.active) CHECK((a * r.z - b)(row) == doctest::Approx(0.0));
}

TEST_CASE("degenerate vertex (three rows meeting in 2-D) still solves") {
    MatrixXd a(3, 2);
    a << 1, 0, 0, 1, 1, 1;  // z1 <= 1, z2 <= 1, z1 + z2 <= 2: common vertex (1,1)
    VectorXd b(3);
    b << 1, 1, 2;
    const auto r = crest::project(vec2(3.0, 3.0), MatrixXd::Identity(2, 2), a, b);
    CHECK(r.z(0) == doctest::Approx(1.0));
    CHECK(r.z(1) == doctest::Approx(1.0));
}

TEST_CASE("projection is idempotent") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = crest::test::feasible_instance(rng, 3, 5);
        const auto first = crest::project(inst.z_u, inst.W, inst.A, inst.b);
        const auto second = crest::project(first.z, inst.W, inst.A, inst.b);
        CHECK((second.z - first.z).norm() < 1e-10 * (1.0 + first.z.norm()));
    }
}

TEST_CASE("solution beats random feasible perturbations") {
    std::mt19937_64 rng(22);
    const auto inst = crest::test::feasible_instance(rng, 3, 5);
    const auto r = crest::project(inst.z_u, inst.W, inst.A, inst.b);
    const VectorXd diff = r.z - inst.z_u;
    const double obj = diff.dot(inst.W * diff);
    int feasible_tried = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const VectorXd z = r.z + crest::test::random_vector(rng, 3, -0.5, 0.5);
        if ((inst.A * z - inst.b).maxCoeff() > 0.0) continue;
        ++feasible_tried;
        const VectorXd d2 = z - inst.z_u;
        CHECK(diff.dot(inst.W * diff) <= d2.dot(inst.W * d2) + 1e-10);
    }
    CHECK(feasible_tried > 0);
    CHECK(obj >= 0.0);
}

TEST_CASE("gamma is a W-weighted generalized inverse of the active rows") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = crest::test::feasible_instance(rng, 4, 6);
        const auto r = crest::project(inst.z_u, inst.W, inst.A, inst.b);
        const int rows = static_cast<int>(r.active.size());
        if (rows == 0) continue;
        MatrixXd a_bar(rows, 4);
        for (int i = 0; i < rows; ++i) a_bar.row(i) = inst.A.row(r.active[i]);
        // The gamma reported by project corresponds to its pruned working
        // rows; recompute from the full active set only when independent.
        if (crest::numerical_rank(a_bar) < rows) continue;
        const MatrixXd gamma = crest::gamma_matrix(inst.W.inverse(), a_bar);
        // Abar gamma = I_r.
        CHECK((a_bar * gamma - MatrixXd::Identity(rows, rows)).norm() < 1e-8);
        // W-orthogonality (I - gamma Abar)^T W gamma Abar = 0.
        const MatrixXd proj = gamma * a_bar;
        const MatrixXd resid =
            (MatrixXd::Identity(4, 4) - proj).transpose() * inst.W * proj;
        CHECK(resid.norm() < 1e-8);
    }
}

TEST_CASE("project matches the brute-force oracle on random instances") {
    std::mt19937_64 rng(24);
    int nontrivial = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const int q = 1 + static_cast<int>(rng() % 4);
        const int s = 1 + static_cast<int>(rng() % 8);
        const auto inst = crest::test::feasible_instance(rng, q, s);
        const auto got = crest::project(inst.z_u, inst.W, inst.A, inst.b);
        const auto want =
            crest::test::brute_force_project(inst.z_u, inst.W, inst.A, inst.b);
        REQUIRE(want.feasible);
        const VectorXd diff = got.z - inst.z_u;
        const double obj = diff.dot(inst.W * diff);
        CHECK(std::abs(obj - want.objective) <=
              1e-8 * (1.0 + std::abs(want.objective)));
        if (!got.active.empty()) ++nontrivial;
    }
    CHECK(nontrivial > 100);  // the ensemble must exercise active sets
}

TEST_CASE("oracle equivalence holds up to 12 rows") {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 40; ++trial) {
        const auto inst = crest::test::feasible_instance(rng, 3, 12);
        const auto got = crest::project(inst.z_u, inst.W, inst.A, inst.b);
        const auto want =
            crest::test::brute_force_project(inst.z_u, inst.W, inst.A, inst.b);
        const VectorXd diff = got.z - inst.z_u;
        const double obj = diff.dot(inst.W * diff);
        CHECK(std::abs(obj - want.objective) <=
              1e-8 * (1.0 + std::abs(want.objective)));
    }
}

TEST_CASE("brute-force oracle refuses oversized instances") {
    std::mt19937_64 rng(26);
    const auto inst = crest::test::feasible_instance(rng, 2, 13);
    CHECK_THROWS_AS(
        crest::test::brute_force_project(inst.z_u, inst.W, inst.A, inst.b),
        std::invalid_argument);
}

TEST_CASE("project_covariance hand examples") {
    // P = I2, one active row [1 0], W = P^-1 = I: gamma = (1,0)^T,
    // result diag(0,1) with trace halved.
    MatrixXd a_bar(1, 2);
    a_bar << 1, 0;
    const MatrixXd gamma =
        crest::gamma_matrix(MatrixXd::Identity(2, 2), a_bar);
    CHECK(gamma(0, 0) == doctest::Approx(1.0));
    CHECK(gamma(1, 0) == doctest::Approx(0.0));
    const MatrixXd p1 =
        crest::project_covariance(MatrixXd::Identity(2, 2), gamma, a_bar);
    CHECK(p1(0, 0) == doctest::Approx(0.0));
    CHECK(p1(1, 1) == doctest::Approx(1.0));
    CHECK(p1.trace() == doctest::Approx(1.0));

    // P = diag(1,4), active row [0 1]: gamma = (0,1)^T, result diag(1,0).
    MatrixXd p = MatrixXd::Zero(2, 2);
    p(0, 0) = 1.0;
    p(1, 1) = 4.0;
    MatrixXd row(1, 2);
    row << 0, 1;
    const MatrixXd gamma2 = crest::gamma_matrix(p, row);
    const MatrixXd p2 = crest::project_covariance(p, gamma2, row);
    CHECK(p2(0, 0) == doctest::Approx(1.0));
    CHECK(p2(1, 1) == doctest::Approx(0.0));
    CHECK(p2(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("project_covariance with zero rows returns P bitwise") {
    MatrixXd p(2, 2);
    p << 1.25, 0.5, 0.5, 3.0;
    const MatrixXd out =
        crest::project_covariance(p, MatrixXd(2, 0), MatrixXd(0, 2));
    CHECK((out - p).norm() == 0.0);
}

TEST_CASE("covariance projection never increases trace with W = P^-1") {
    std::mt19937_64 rng(27);
    for (int trial = 0; trial < 50; ++trial) {
        const MatrixXd p = crest::test::random_spd(rng, 4, 0.2, 4.0);
        const auto inst = crest::test::feasible_instance(rng, 4, 6);
        const auto r = crest::project(inst.z_u, p.inverse(), inst.A, inst.b);
        if (r.active.empty()) continue;
        MatrixXd a_bar(r.gamma.cols(), 4);
        // gamma columns correspond to the pruned working rows in `active`
        // order only when the set is independent; rebuild from scratch.
        if (static_cast<int>(r.active.size()) != r.gamma.cols()) continue;
        for (int i = 0; i < a_bar.rows(); ++i)
            a_bar.row(i) = inst.A.row(r.active[i]);
        const MatrixXd projected = crest::project_covariance(p, r.gamma, a_bar);
        CHECK(projected.trace() <= p.trace() + 1e-9);
        CHECK(crest::is_psd(projected));
    }
}

TEST_CASE("region_feasible classifies simple regions") {
    MatrixXd a(2, 1);
    a << 1, -1;
    CHECK(crest::region_feasible(a, vec2(1.0, 0.0)));    // 0 <= z <= 1
    CHECK_FALSE(crest::region_feasible(a, vec2(1.0, -2.0)));  // 2 <= z <= 1
    // Empty system is trivially feasible.
    CHECK(crest::region_feasible(MatrixXd(0, 3), VectorXd(0)));
    // Equality-thin region x <= 0, -x <= 0.
    CHECK(crest::region_feasible(a, vec2(0.0, 0.0)));
}
