#include <gtest/gtest.h>

#include <cmath>

#include "bcdcert/problems.hpp"
#include "bcdcert/strategies.hpp"
#include "test_support.hpp"

namespace bcdcert {
namespace {

BlockPoint pt(double x, double y) { return {Vector::Constant(1, x), Vector::Constant(1, y)}; }
BlockPoint px(double x) { return {Vector::Constant(1, x), Vector(0)}; }

Errc code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return Errc::InvalidArgument;
}

const TightQuadratic kTight(4.0, 0.0, Vector::Zero(1), Vector::Zero(1)); // f = 2 x^2

TEST(FixedStep, TightQuadraticLandsOnVertex)
{
    const XUpdateResult r = fixed_step_gradient_x(kTight, px(1.0));
    EXPECT_EQ(r.x_next[0], 0.0);
    EXPECT_EQ(r.e_t, 4.0);
    EXPECT_EQ(r.decrease, 2.0);
    EXPECT_EQ(r.required, 2.0); // (1/8) * 16
}

TEST(FixedStep, StationaryPointIsFixed)
{
    const XUpdateResult r = fixed_step_gradient_x(kTight, px(0.0));
    EXPECT_EQ(r.x_next[0], 0.0);
    EXPECT_EQ(r.decrease, 0.0);
}

TEST(FixedStep, CoupledQuadraticHandStep)
{
    const auto q = CoupledQuadratic::scalar(1, 1, 2);
    const XUpdateResult r = fixed_step_gradient_x(q, pt(1.0, -0.5));
    EXPECT_DOUBLE_EQ(r.x_next[0], 0.5);
    EXPECT_EQ(r.e_t, 1.0);
    EXPECT_DOUBLE_EQ(r.decrease, 0.125);
    EXPECT_DOUBLE_EQ(r.required, 0.125);
}

TEST(FixedStep, Errors)
{
    EXPECT_EQ(code_of([] { fixed_step_gradient_x(TwoBlockRosenbrock(), pt(0.5, 0.25)); }),
              Errc::MissingLipschitzOracle);

    // Declared L = 2 on f = 2x^2: the step overshoots to x = -1 and f does not move.
    auto base = std::make_shared<TightQuadratic>(kTight);
    const DeclaredLipschitz wrong(base, 2.0);
    EXPECT_EQ(code_of([&] { fixed_step_gradient_x(wrong, px(1.0)); }), Errc::SufficientDecreaseViolated);
}

TEST(ExactMin, CoupledQuadraticArgmin)
{
    const auto q = CoupledQuadratic::scalar(1, 1, 2);
    const XUpdateResult r = exact_min_x(q, pt(1.0, -0.5));
    EXPECT_DOUBLE_EQ(r.x_next[0], 0.5);
    EXPECT_EQ(r.e_t, 1.0);
    EXPECT_GE(r.decrease, 0.125 - 1e-12);
}

TEST(ExactMin, JointMinimizerIsFixed)
{
    const auto q = CoupledQuadratic::random(3, 4, 3);
    const BlockPoint star = joint_solve_oracle(q);
    const XUpdateResult r = exact_min_x(q, star);
    EXPECT_LE((r.x_next - star.x()).norm(), 1e-12);
    EXPECT_NEAR(r.decrease, 0.0, 1e-14);
}

TEST(ExactMin, Errors)
{
    const auto mf = MatrixFactorization::random(1, 4, 3, 2);
    Matrix y(2, 3);
    y << 1, 2, 3, 2, 4, 6;
    const BlockPoint p(Vector::Ones(8), Eigen::Map<const Vector>(y.data(), 6));
    EXPECT_EQ(code_of([&] { exact_min_x(mf, p); }), Errc::MissingExactMinimizer);

    // Rosenbrock has neither oracle; the missing minimizer is reported first.
    EXPECT_EQ(code_of([] { exact_min_x(TwoBlockRosenbrock(), pt(0.0, 0.0)); }), Errc::MissingExactMinimizer);

    class MinOnly final : public Objective
    {
    public:
        std::string name() const override { return "min_only"; }
        std::size_t dim_x() const override { return 1; }
        std::size_t dim_y() const override { return 0; }
        double value(const BlockPoint& p) const override { return p.x().squaredNorm(); }
        Vector grad_x(const BlockPoint& p) const override { return 2.0 * p.x(); }
        Vector grad_y(const BlockPoint&) const override { return Vector(0); }
        std::optional<Vector> exact_min_x(const Vector&) const override { return Vector::Zero(1); }
    } min_only;
    EXPECT_EQ(code_of([&] { exact_min_x(min_only, px(1.0)); }), Errc::MissingLipschitzOracle);
}

TEST(Backtracking, DoublingChainOnTightQuadratic)
{
    // L^ = 1: x' = -3, f = 18, rejected. L^ = 2: x' = -1, f = 2, rejected.
    // L^ = 4: x' = 0, f = 0, decrease 2 >= 2, accepted.
    const XUpdateResult r = backtracking_gradient_x(kTight, px(1.0), {1.0, 2.0, 10});
    EXPECT_EQ(r.e_t, 4.0);
    EXPECT_EQ(r.x_next[0], 0.0);
    EXPECT_EQ(r.inner_evals, 4u);
}

TEST(Backtracking, ZeroGradientAcceptsImmediately)
{
    const XUpdateResult r = backtracking_gradient_x(kTight, px(0.0), {0.3, 2.0, 10});
    EXPECT_EQ(r.e_t, 0.3);
    EXPECT_EQ(r.x_next[0], 0.0);
}

TEST(Backtracking, RosenbrockTinyInitialEstimate)
{
    const TwoBlockRosenbrock r;
    const XUpdateResult out = backtracking_gradient_x(r, pt(-1.8, 3.24), {1e-6, 2.0, 60});
    EXPECT_TRUE(std::isfinite(out.e_t));
    EXPECT_GE(out.decrease, out.required - 1e-12 * std::max(1.0, r.value(pt(-1.8, 3.24))));

    EXPECT_EQ(code_of([&] { backtracking_gradient_x(r, pt(-1.8, 3.24), {1e-6, 2.0, 3}); }),
              Errc::BacktrackExhausted);
}

TEST(Backtracking, InvalidParameters)
{
    EXPECT_EQ(code_of([] { backtracking_gradient_x(kTight, px(1.0), {1.0, 1.0, 10}); }), Errc::InvalidArgument);
    EXPECT_EQ(code_of([] { backtracking_gradient_x(kTight, px(1.0), {0.0, 2.0, 10}); }), Errc::InvalidArgument);
    EXPECT_EQ(code_of([] { backtracking_gradient_x(kTight, px(1.0), {1.0, 2.0, 0}); }), Errc::InvalidArgument);
}

TEST(StationaryY, LinearSolveOnCoupledQuadratic)
{
    const auto q = CoupledQuadratic::scalar(1, 1, 2);
    const StationaryResult r = stationary_y(q, pt(1.0, 0.0), 1e-10);
    EXPECT_DOUBLE_EQ(r.y_next[0], -0.5);
    EXPECT_LE(r.residual, 1e-15);
}

TEST(StationaryY, RosenbrockParabola)
{
    const StationaryResult r = stationary_y(TwoBlockRosenbrock(), pt(0.3, 1.0), 1e-10);
    EXPECT_DOUBLE_EQ(r.y_next[0], 0.09);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(StationaryY, AlreadyStationaryIsUnchanged)
{
    const auto q = CoupledQuadratic::scalar(1, 1, 2);
    const StationaryResult r = stationary_y(q, pt(1.0, -0.5), 1e-10);
    EXPECT_EQ(r.y_next[0], -0.5);
    EXPECT_LE(r.residual, 1e-10);
}

TEST(StationaryY, EmptyBlock)
{
    const StationaryResult r = stationary_y(kTight, px(1.0), 1e-10);
    EXPECT_EQ(r.y_next.size(), 0);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(StationaryY, DescentFallbackWithoutExactMinimizer)
{
    auto base = std::make_shared<CoupledQuadratic>(CoupledQuadratic::random(5, 3, 4));
    testing::Wrapped w(base);
    w.hide_exact_min_y = true;
    const BlockPoint p = random_start(w, 2);
    const StationaryResult r = stationary_y(w, p, 1e-9);
    EXPECT_LE(r.residual, 1e-9);
    EXPECT_GT(r.inner_iters, 0u);
    EXPECT_LE(w.value(p.with_y(r.y_next)), w.value(p));
    EXPECT_LE((r.y_next - *base->exact_min_y(p.x())).norm(), 1e-7);

    try {
        stationary_y(w, p, 1e-9, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InnerSolveFailed);
    }
}

TEST(FullGradientStep, HandCases)
{
    const auto q = CoupledQuadratic::scalar(1, 1, 2);
    const BlockPoint next = full_gradient_step(q, pt(1.0, 0.0), 0.1);
    EXPECT_DOUBLE_EQ(next.x()[0], 0.9);
    EXPECT_DOUBLE_EQ(next.y()[0], -0.1);
    EXPECT_EQ(full_gradient_step(q, pt(1.0, 0.0), 0.0), pt(1.0, 0.0));
    EXPECT_EQ(full_gradient_step(q, pt(0.0, 0.0), 0.5), pt(0.0, 0.0));
    EXPECT_THROW(full_gradient_step(q, pt(0.0, 0.0), -1.0), Error);
}

// Properties over random points of every bundled problem.

TEST(StrategyProperties, CertifiedDecreaseAtRandomPoints)
{
    for (const auto& [label, obj] : testing::bundled_problems()) {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const BlockPoint p = random_start(*obj, 500 + seed);
            const double f = obj->value(p);
            const double g2 = obj->grad_x(p).squaredNorm();
            auto certified = [&](const XUpdateResult& r) {
                const double achieved = f - obj->value(p.with_x(r.x_next));
                EXPECT_GT(r.e_t, 0.0);
                EXPECT_GE(achieved, g2 / (2.0 * r.e_t) - 1e-12 * std::max(1.0, std::abs(f))) << label << " " << seed;
            };
            if (obj->lipschitz_x(p.y())) certified(fixed_step_gradient_x(*obj, p));
            if (obj->lipschitz_x(p.y()) && obj->exact_min_x(p.y())) certified(exact_min_x(*obj, p));
            certified(backtracking_gradient_x(*obj, p, {1e-3, 2.0, 80}));
            if (p.dim_y() > 0) {
                const StationaryResult s = stationary_y(*obj, p, 1e-10 * std::max(1.0, obj->grad_y(p).norm()));
                EXPECT_LE(obj->value(p.with_y(s.y_next)), f + 1e-12 * std::max(1.0, std::abs(f))) << label;
            }
        }
    }
}

TEST(StrategyProperties, ExactMinDominatesFixedStep)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto q = CoupledQuadratic::random(seed, 4, 3);
        const BlockPoint p = random_start(q, seed);
        const double f = q.value(p);
        const double d_exact = exact_min_x(q, p).decrease;
        const double d_fixed = fixed_step_gradient_x(q, p).decrease;
        EXPECT_GE(d_exact, d_fixed - 1e-12 * std::max(1.0, std::abs(f))) << seed;
    }
}

TEST(StrategyProperties, BacktrackingStaysBelowTwiceTrueL)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto q = CoupledQuadratic::random(seed, 5, 2);
        const double true_l = testing::dense_lambda_max(q.A());
        const BlockPoint p = random_start(q, seed + 7);
        const XUpdateResult r = backtracking_gradient_x(q, p, {1e-2, 2.0, 60});
        EXPECT_LT(r.e_t, 2.0 * true_l) << seed;
    }
}

} // namespace
} // namespace bcdcert
