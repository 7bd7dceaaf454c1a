#include <gtest/gtest.h>

#include <Eigen/Cholesky>
#include <cmath>

#include "bcdcert/problems.hpp"
#include "bcdcert/solver.hpp"
#include "bcdcert/strategies.hpp"
#include "test_support.hpp"

namespace bcdcert {
namespace {

TEST(JointSolve, HandCases)
{
    const BlockPoint zero = joint_solve_oracle(CoupledQuadratic::scalar(1, 1, 2));
    EXPECT_EQ(zero.x()[0], 0.0);
    EXPECT_EQ(zero.y()[0], 0.0);

    // x + y = 1, x + 2y = 0.
    const BlockPoint p = joint_solve_oracle(CoupledQuadratic::scalar(1, 1, 2, -1.0, 0.0));
    EXPECT_NEAR(p.x()[0], 2.0, 1e-14);
    EXPECT_NEAR(p.y()[0], -1.0, 1e-14);
}

TEST(JointSolve, RandomInstanceResidual)
{
    const auto q = CoupledQuadratic::random(42, 5, 3);
    const BlockPoint p = joint_solve_oracle(q);
    EXPECT_LE(evaluate(q, p).grad_norm(), 1e-10);
}

TEST(JointSolve, SingularSystem)
{
    // Joint Hessian [[1, 1], [1, 1]] is singular though C = 1 is PD.
    const auto q = CoupledQuadratic::scalar(1, 1, 1);
    try {
        joint_solve_oracle(q);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SingularSystem);
    }
}

TEST(MakeProblem, TightQuadraticModel)
{
    ProblemSpec spec;
    spec.family = "tight_quadratic";
    spec.l_const = 4.0;
    spec.anchor = Vector::Constant(1, 1.0);
    spec.g_anchor = Vector::Constant(1, 4.0);
    spec.c_const = 2.0;
    const auto obj = make_problem(spec);
    EXPECT_DOUBLE_EQ(obj->value(BlockPoint(Vector::Constant(1, 1.0), Vector(0))), 2.0);
    EXPECT_DOUBLE_EQ(obj->value(BlockPoint(Vector::Constant(1, 0.0), Vector(0))), 0.0);
    EXPECT_EQ(*obj->lipschitz_x(Vector(0)), 4.0);
    EXPECT_EQ(obj->dim_y(), 0u);
}

TEST(MakeProblem, CoupledQuadraticIsPositiveDefinite)
{
    ProblemSpec spec;
    spec.family = "coupled_quadratic";
    spec.seed = 7;
    spec.n_x = 5;
    spec.n_y = 3;
    const auto obj = make_problem(spec);
    const auto& q = dynamic_cast<const CoupledQuadratic&>(*obj);
    Eigen::LLT<Matrix> chol(q.joint_hessian());
    EXPECT_EQ(chol.info(), Eigen::Success);
    EXPECT_EQ(obj->dim_x(), 5u);
    EXPECT_EQ(obj->dim_y(), 3u);
    EXPECT_NEAR(*obj->lipschitz_x(Vector::Zero(3)), testing::dense_lambda_max(q.A()), 1e-10);

    // Same spec, same instance.
    const auto again = make_problem(spec);
    const BlockPoint p = random_start(*obj, 1);
    EXPECT_EQ(obj->value(p), again->value(p));
}

TEST(MakeProblem, FactorizationOfIdentity)
{
    ProblemSpec spec;
    spec.family = "matrix_factorization";
    spec.target = Matrix::Identity(2, 2);
    spec.rank = 2;
    const auto obj = make_problem(spec);
    const Matrix i = Matrix::Identity(2, 2);
    const Vector v = Eigen::Map<const Vector>(i.data(), 4);
    EXPECT_EQ(obj->value(BlockPoint(v, v)), 0.0);
}

TEST(MakeProblem, Errors)
{
    ProblemSpec bad;
    bad.family = "nope";
    try {
        make_problem(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownFamily);
    }

    ProblemSpec mf;
    mf.family = "matrix_factorization";
    mf.m = 3;
    mf.n = 2;
    mf.rank = 3;
    try {
        make_problem(mf);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidDimensions);
    }

    ProblemSpec tq;
    tq.family = "tight_quadratic";
    tq.anchor = Vector::Zero(2);
    tq.g_anchor = Vector::Zero(3);
    EXPECT_THROW(make_problem(tq), Error);
}

TEST(MakeProblem, DeclaredLipschitzOverride)
{
    ProblemSpec spec;
    spec.family = "two_block_rosenbrock";
    EXPECT_FALSE(make_problem(spec)->lipschitz_x(Vector::Zero(1)));
    spec.declared_lipschitz = 50.0;
    EXPECT_EQ(*make_problem(spec)->lipschitz_x(Vector::Zero(1)), 50.0);
}

TEST(Rosenbrock, ExactMinimizerInY)
{
    const TwoBlockRosenbrock r;
    EXPECT_DOUBLE_EQ((*r.exact_min_y(Vector::Constant(1, 0.3)))[0], 0.09);
    EXPECT_FALSE(r.lipschitz_x(Vector::Zero(1)));
    EXPECT_FALSE(r.exact_min_x(Vector::Zero(1)));
}

TEST(MatrixFactorization, RankDeficientBlocksHaveNoExactMinimizer)
{
    const auto mf = MatrixFactorization::random(1, 4, 3, 2);
    Matrix y(2, 3);
    y << 1, 2, 3, 2, 4, 6; // rank one
    const Vector yv = Eigen::Map<const Vector>(y.data(), y.size());
    EXPECT_FALSE(mf.exact_min_x(yv));
    Matrix x(4, 2);
    x << 1, 1, 2, 2, 3, 3, 4, 4;
    const Vector xv = Eigen::Map<const Vector>(x.data(), x.size());
    EXPECT_FALSE(mf.exact_min_y(xv));
}

// Bundled-problem behaviour under the full solver.

TEST(ProblemRuns, TightQuadraticDecreaseIsEquality)
{
    const TightQuadratic q(3.0, -1.0, Vector::Constant(3, 0.5), Vector::Constant(3, 0.0));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SolverConfig cfg;
        cfg.max_iters = 1;
        const RunResult run = solve(q, random_start(q, seed), cfg);
        ASSERT_FALSE(run.error);
        ASSERT_EQ(run.history.size(), 1u);
        const auto& r = run.history.front();
        const double required = r.gx_norm_sq / (2.0 * r.e_t);
        const double decrease = r.f_before - r.f_after_x;
        EXPECT_LE(std::abs(decrease - required), 1e-12 * required) << seed;
    }
}

TEST(ProblemRuns, CoupledQuadraticReachesJointSolution)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto q = CoupledQuadratic::random(seed, 6, 4);
        const BlockPoint star = joint_solve_oracle(q);
        SolverConfig cfg;
        cfg.max_iters = 20000;
        cfg.grad_tol = 1e-12;
        const RunResult run = solve(q, random_start(q, seed + 50), cfg);
        ASSERT_FALSE(run.error);
        EXPECT_TRUE(run.certificate.certified());
        const double dist = std::sqrt((run.final.x() - star.x()).squaredNorm() + (run.final.y() - star.y()).squaredNorm());
        EXPECT_LE(dist, 1e-8) << seed;
    }
}

TEST(ProblemRuns, FactorizationReachesStationarity)
{
    for (XStrategy s : {XStrategy::exact_min, XStrategy::fixed_step}) {
        const auto mf = MatrixFactorization::random(9, 6, 5, 2);
        SolverConfig cfg;
        cfg.x_strategy = s;
        cfg.max_iters = 20000;
        cfg.grad_tol = 1e-7;
        const RunResult run = solve(mf, random_start(mf, 4, 1.0), cfg);
        ASSERT_FALSE(run.error) << run.error->message;
        EXPECT_TRUE(run.certificate.certified());
        EXPECT_LT(std::sqrt(run.certificate.min_grad_sq), 1e-6);
        for (const auto& r : run.history) {
            EXPECT_LE(r.f_after_x, r.f_before + 1e-12 * std::max(1.0, std::abs(r.f_before)));
            EXPECT_LE(r.f_after_y, r.f_after_x + 1e-12 * std::max(1.0, std::abs(r.f_after_x)));
        }
    }
}

TEST(ProblemRuns, RosenbrockBacktrackingReachesMinimizer)
{
    const TwoBlockRosenbrock r;
    for (double x0 : {-2.0, -1.3, -0.4, 0.0, 0.7, 1.5, 2.0}) {
        SolverConfig cfg;
        cfg.x_strategy = XStrategy::backtracking;
        cfg.max_iters = 200000;
        cfg.grad_tol = 1e-6;
        const RunResult run = solve(r, BlockPoint(Vector::Constant(1, x0), Vector::Constant(1, -x0)), cfg);
        ASSERT_FALSE(run.error) << run.error->message;
        EXPECT_TRUE(run.certificate.certified()) << x0;
        EXPECT_EQ(run.stop_reason, StopReason::grad_tol_met) << x0;
        EXPECT_LE(std::hypot(run.final.x()[0] - 1.0, run.final.y()[0] - 1.0), 1e-4) << x0;
    }
}

} // namespace
} // namespace bcdcert
