#include "armour/errors.hpp"
#include "armour/solver.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <thread>

using namespace armour;

namespace {

NlpProblem box_problem(int n)
{
    NlpProblem p;
    p.n = n;
    p.lo = Eigen::VectorXd::Constant(n, -1.0);
    p.hi = Eigen::VectorXd::Constant(n, 1.0);
    p.constraints = [](const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd* J) {
        g.resize(0);
        if (J) J->resize(0, x.size());
    };
    return p;
}

NlpProblem quadratic(const Eigen::VectorXd& a)
{
    auto p = box_problem(static_cast<int>(a.size()));
    p.cost = [a](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
        if (grad) *grad = 2 * (x - a);
        return (x - a).squaredNorm();
    };
    return p;
}

} // namespace

TEST(Solver, BoxProjection)
{
    const AugmentedLagrangianSolver s;
    const auto r = s.solve(quadratic(Eigen::Vector3d(2.0, -0.3, -5.0)), Eigen::Vector3d::Zero(), {});
    ASSERT_TRUE(r.ok());
    EXPECT_NEAR(r.x[0], 1.0, 1e-9);
    EXPECT_NEAR(r.x[1], -0.3, 1e-6);
    EXPECT_NEAR(r.x[2], -1.0, 1e-9);
}

TEST(Solver, LinearConstraintKkt)
{
    // min |x - (1, 1)|^2 s.t. x0 + x1 <= 1: solution (0.5, 0.5), multiplier 1
    auto p = quadratic(Eigen::Vector2d(1, 1));
    p.constraints = [](const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd* J) {
        g = Eigen::VectorXd::Constant(1, x.sum() - 1.0);
        if (J) *J = Eigen::RowVector2d(1, 1);
    };
    const auto r = AugmentedLagrangianSolver().solve(p, Eigen::Vector2d::Zero(), {});
    ASSERT_TRUE(r.ok());
    EXPECT_LE(r.max_violation, 0.0);
    EXPECT_NEAR(r.x[0], 0.5, 1e-5);
    EXPECT_NEAR(r.x[1], 0.5, 1e-5);
    EXPECT_NEAR(r.cost, 0.5, 1e-5);
}

TEST(Solver, NonconvexFeasibleSet)
{
    // stay outside a disk: min |x - (0.1, 0)|^2 s.t. 0.25 - |x|^2 <= 0, optimum (0.5, 0)
    auto p = quadratic(Eigen::Vector2d(0.1, 0));
    p.constraints = [](const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd* J) {
        g = Eigen::VectorXd::Constant(1, 0.25 - x.squaredNorm());
        if (J) *J = -2 * x.transpose();
    };
    const auto r = AugmentedLagrangianSolver().solve(p, Eigen::Vector2d(0.2, 0.05), {});
    ASSERT_TRUE(r.ok());
    EXPECT_LE(0.25 - r.x.squaredNorm(), 0.0);
    EXPECT_NEAR(r.x[0], 0.5, 1e-4);
    EXPECT_NEAR(r.x[1], 0.0, 1e-3);
}

TEST(Solver, Rosenbrock)
{
    auto p = box_problem(2);
    p.cost = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        const double a = 1 - x[0], b = x[1] - x[0] * x[0];
        if (g) *g = Eigen::Vector2d(-2 * a - 400 * x[0] * b, 200 * b);
        return a * a + 100 * b * b;
    };
    SolverOptions o;
    o.max_inner = 2000;
    const auto r = AugmentedLagrangianSolver().solve(p, Eigen::Vector2d(-0.8, 0.6), o);
    ASSERT_TRUE(r.ok());
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(Solver, InfeasibleReported)
{
    auto p = quadratic(Eigen::Vector2d::Zero());
    p.constraints = [](const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd* J) {
        g = Eigen::VectorXd::Constant(1, 2.0 - x.squaredNorm() * 0.1);
        if (J) *J = -0.2 * x.transpose();
    };
    const auto r = AugmentedLagrangianSolver().solve(p, Eigen::Vector2d::Zero(), {});
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.status, SolveStatus::infeasible);
    EXPECT_GT(r.max_violation, 0);
}

TEST(Solver, TimeLimitHonoured)
{
    auto p = quadratic(Eigen::Vector2d(0.3, 0.3));
    // always violated and slow, so the clock is the only way out
    p.constraints = [](const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd* J) {
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        g = Eigen::VectorXd::Constant(1, 1.0 + 0.01 * x[0]);
        if (J) *J = Eigen::RowVector2d(0.01, 0);
    };
    SolverOptions o;
    o.time_limit = 0.05;
    o.max_outer = 1000000;
    const auto r = AugmentedLagrangianSolver().solve(p, Eigen::Vector2d::Zero(), o);
    EXPECT_EQ(r.status, SolveStatus::timeout);
    EXPECT_TRUE(r.hit_time_limit);
    EXPECT_LT(r.wall_time, o.time_limit + 0.05);
}

TEST(Solver, NonFiniteIsDivergence)
{
    auto p = box_problem(1);
    p.cost = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::VectorXd::Constant(1, 1.0);
        return x[0] > 0.5 ? std::nan("") : x[0];
    };
    const auto r = AugmentedLagrangianSolver().solve(p, Eigen::VectorXd::Constant(1, 0.9), {});
    EXPECT_EQ(r.status, SolveStatus::diverged);
    EXPECT_EQ(to_string(r.status), "diverged");
    EXPECT_THROW(AugmentedLagrangianSolver().solve(p, Eigen::VectorXd::Zero(2), {}), DimensionError);
}
