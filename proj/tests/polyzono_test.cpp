#include "armour/errors.hpp"
#include "armour/polyzono.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace armour;
using armour::testing::flat;
using armour::testing::inside;
using armour::testing::random_assignment;
using armour::testing::random_pz;
using armour::testing::Rng;
using armour::testing::sample_point;
using armour::testing::unflat;

namespace {

const IndeterminateId X = IndeterminateId::time(0);
const IndeterminateId Y = IndeterminateId::err_pos(0);
const IndeterminateId K0 = IndeterminateId::param(0);
const IndeterminateId K1 = IndeterminateId::param(1);

std::vector<IndeterminateId> some_ids() { return {X, Y, K0, K1, IndeterminateId::err_vel(1)}; }

} // namespace

TEST(PzFromInterval, Formula)
{
    IntervalMatrix z(1, 1);
    z[0] = Interval(0, 2);
    const auto p = pz_from_interval(z, {X});
    EXPECT_EQ(p.center()[0], 1.0);
    ASSERT_EQ(p.n_generators(), 1);
    EXPECT_EQ(p.generators()(0, 0), 1.0);

    z[0] = Interval(1.5);
    EXPECT_EQ(pz_from_interval(z, {X}).n_generators(), 0);

    IntervalMatrix z2(2, 1);
    z2[0] = Interval(-1, 3);
    z2[1] = Interval(2, 2);
    const auto q = pz_from_interval(z2, fresh_ids(2));
    EXPECT_EQ(q.center(), Eigen::Vector2d(1, 2));
    ASSERT_EQ(q.n_generators(), 1);
    EXPECT_EQ(Eigen::Vector2d(q.generators().col(0)), Eigen::Vector2d(2, 0));
    const auto b = pz_bounds(q);
    EXPECT_EQ(b.inf, Eigen::Vector2d(-1, 2));
    EXPECT_EQ(b.sup, Eigen::Vector2d(3, 2));
}

TEST(PzFromInterval, DuplicateIdsRejected)
{
    IntervalMatrix z(2, 1);
    z[0] = Interval(0, 1);
    z[1] = Interval(0, 1);
    EXPECT_THROW(pz_from_interval(z, {X, X}), IdCollisionError);
}

TEST(PzSum, Identity)
{
    Rng rng(1);
    const auto p = random_pz(rng, 2, 1, some_ids(), 6);
    EXPECT_EQ(pz_to_json(p + PolyZonotope(Eigen::Vector2d::Zero())), pz_to_json(p));
}

TEST(PzSum, SharedIdsAddFunctionally)
{
    const auto a = PolyZonotope::variable(X, 1.0, 2.0);
    const auto b = PolyZonotope::variable(X, 3.0, 4.0);
    const auto s = a + b;
    EXPECT_EQ(s.center()[0], 4.0);
    ASSERT_EQ(s.n_generators(), 1);
    EXPECT_EQ(s.generators()(0, 0), 6.0);
    EXPECT_EQ(s.exponent_of(X, 0), 1);
}

TEST(PzSum, DimensionMismatch)
{
    EXPECT_THROW(PolyZonotope(Eigen::Vector2d::Zero()) + PolyZonotope(Eigen::Vector3d::Zero()), DimensionError);
}

TEST(PzSum, DisjointContainment)
{
    Rng rng(2);
    const auto a = random_pz(rng, 3, 1, {X, Y}, 5, 2, 0.1);
    const auto b = random_pz(rng, 3, 1, {K0, K1}, 5, 2, 0.2);
    const auto bounds = pz_bounds(a + b);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto x = random_assignment(rng, {X, Y, K0, K1});
        ASSERT_TRUE(inside(bounds, sample_point(rng, a, x) + sample_point(rng, b, x)));
    }
}

TEST(PzMul, IdentityAndSquare)
{
    Rng rng(3);
    const auto p = random_pz(rng, 3, 2, some_ids(), 5);
    const auto I = PolyZonotope::constant(Eigen::Matrix3d::Identity());
    EXPECT_EQ(pz_to_json(pz_mul(I, p)), pz_to_json(p));

    const auto sq = pz_pow(PolyZonotope::variable(X, 1.0, 1.0), 2);
    EXPECT_EQ(sq.center()[0], 1.0);
    ASSERT_EQ(sq.n_generators(), 2);
    // lexicographic order: x^1 before x^2
    EXPECT_EQ(sq.exponent_of(X, 0), 1);
    EXPECT_EQ(sq.generators()(0, 0), 2.0);
    EXPECT_EQ(sq.exponent_of(X, 1), 2);
    EXPECT_EQ(sq.generators()(0, 1), 1.0);
}

TEST(PzMul, CrossOfBasis)
{
    const auto e1 = PolyZonotope(Eigen::Vector3d::UnitX());
    const auto e2 = PolyZonotope(Eigen::Vector3d::UnitY());
    const auto c = pz_cross(e1, e2);
    EXPECT_EQ(c.center(), Eigen::Vector3d::UnitZ());
    EXPECT_EQ(c.n_generators(), 0);
}

TEST(PzMul, ShapeMismatch)
{
    EXPECT_THROW(pz_mul(PolyZonotope(Eigen::Vector2d::Zero()), PolyZonotope(Eigen::Vector3d::Zero())),
                 DimensionError);
}

TEST(PzMul, MatrixProductContainmentSharedIds)
{
    Rng rng(4);
    const auto ids = some_ids();
    for (int rep = 0; rep < 5; ++rep) {
        const auto A = random_pz(rng, 3, 3, ids, 8, 2, 0.05);
        const auto B = random_pz(rng, 3, 1, ids, 8, 2, 0.05);
        const auto C = pz_mul(A, B);
        const auto bounds = pz_bounds(C);
        for (int trial = 0; trial < 2000; ++trial) {
            const auto x = random_assignment(rng, ids);
            const Eigen::MatrixXd a = unflat(sample_point(rng, A, x), 3, 3);
            const Eigen::VectorXd b = sample_point(rng, B, x);
            ASSERT_TRUE(inside(bounds, a * b));
        }
    }
}

TEST(PzMul, PolynomialMapIsExact)
{
    Rng rng(5);
    const auto ids = some_ids();
    const auto A = random_pz(rng, 2, 3, ids, 6);
    const auto B = random_pz(rng, 3, 2, ids, 6);
    const auto C = pz_mul(A, B);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = random_assignment(rng, ids);
        const Eigen::MatrixXd ref = unflat(A.evaluate(x), 2, 3) * unflat(B.evaluate(x), 3, 2);
        ASSERT_LT((C.evaluate(x) - flat(ref)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(PzMul, CrossContainment)
{
    Rng rng(6);
    const auto ids = some_ids();
    const auto a = random_pz(rng, 3, 1, ids, 6, 2, 0.1);
    const auto b = random_pz(rng, 3, 1, ids, 6, 2, 0.1);
    const auto bounds = pz_bounds(pz_cross(a, b));
    for (int trial = 0; trial < 10000; ++trial) {
        const auto x = random_assignment(rng, ids);
        const Eigen::Vector3d u = sample_point(rng, a, x), v = sample_point(rng, b, x);
        ASSERT_TRUE(inside(bounds, u.cross(v)));
    }
}

TEST(PzSlice, Substitution)
{
    const auto p = PolyZonotope::variable(K0, 1.0, 2.0);
    const auto s = pz_slice(p, {{K0, 0.5}});
    EXPECT_EQ(s.center()[0], 2.0);
    EXPECT_EQ(s.n_generators(), 0);
    EXPECT_EQ(pz_to_json(pz_slice(p, {{K1, 0.3}})), pz_to_json(p));
    EXPECT_THROW(pz_slice(p, {{K0, 1.5}}), RangeError);
}

TEST(PzSlice, SlicedPointsLieInOriginal)
{
    Rng rng(7);
    const auto ids = some_ids();
    const auto p = random_pz(rng, 2, 1, ids, 10, 3, 0.1);
    const auto bounds = pz_bounds(p);
    for (int rep = 0; rep < 20; ++rep) {
        const double k0 = rng.uniform(), k1 = rng.uniform();
        const auto s = pz_slice(p, {{K0, k0}, {K1, k1}});
        const auto sb = pz_bounds(s);
        for (int d = 0; d < 2; ++d) {
            EXPECT_GE(sb.inf[d], bounds.inf[d] - 1e-12);
            EXPECT_LE(sb.sup[d], bounds.sup[d] + 1e-12);
        }
        for (int trial = 0; trial < 500; ++trial) {
            auto x = random_assignment(rng, ids);
            x[K0] = k0;
            x[K1] = k1;
            ASSERT_LT((s.evaluate(x) - p.evaluate(x)).norm(), 1e-12);
            ASSERT_TRUE(inside(bounds, sample_point(rng, s, x)));
        }
    }
}

TEST(PzSlice, DisjointSlicesCommute)
{
    Rng rng(8);
    const auto p = random_pz(rng, 2, 1, some_ids(), 12, 3);
    const auto a = pz_slice(pz_slice(p, {{K0, 0.3}}), {{Y, -0.7}});
    const auto b = pz_slice(pz_slice(p, {{Y, -0.7}}), {{K0, 0.3}});
    ASSERT_EQ(a.n_generators(), b.n_generators());
    EXPECT_EQ(a.exponents(), b.exponents());
    EXPECT_LT((a.generators() - b.generators()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((a.center() - b.center()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PzBounds, Formula)
{
    Eigen::MatrixXi E(2, 2);
    E << 1, 1, 0, 1;
    const PolyZonotope p(1, 1, Eigen::VectorXd::Constant(1, 1.0), Eigen::RowVector2d(2, 3), E, {X, Y});
    const auto b = pz_bounds(p);
    EXPECT_EQ(b.inf[0], -4.0);
    EXPECT_EQ(b.sup[0], 6.0);

    const auto c = pz_bounds(PolyZonotope(Eigen::Vector2d(1, -2)));
    EXPECT_EQ(c.inf, c.sup);
}

TEST(PzBounds, TightVariantUsesEvenMonomials)
{
    Eigen::MatrixXi E(1, 1);
    E << 2;
    const PolyZonotope p(1, 1, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0), E, {X});
    EXPECT_EQ(pz_bounds(p).inf[0], -1.0);
    EXPECT_EQ(pz_bounds(p, true).inf[0], 0.0);
    EXPECT_EQ(pz_bounds(p, true).sup[0], 1.0);
}

TEST(PzBounds, SampledPointsInside)
{
    Rng rng(9);
    const auto ids = some_ids();
    const auto p = random_pz(rng, 4, 1, ids, 15, 4, 0.2);
    const auto b = pz_bounds(p), t = pz_bounds(p, true);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto v = sample_point(rng, p, random_assignment(rng, ids));
        ASSERT_TRUE(inside(b, v));
        ASSERT_TRUE(inside(t, v));
    }
}

TEST(PzTaylor, DegenerateInputs)
{
    const auto s = pz_taylor(AnalyticFunction::sin(), PolyZonotope::scalar(0.0));
    EXPECT_EQ(s.center()[0], 0.0);
    EXPECT_EQ(s.n_generators(), 0);
    EXPECT_EQ(s.box()[0], 0.0);
    const auto c = pz_taylor(AnalyticFunction::cos(), PolyZonotope::scalar(0.0));
    EXPECT_EQ(c.center()[0], 1.0);
    EXPECT_EQ(c.box()[0], 0.0);
}

TEST(PzTaylor, SinContainment)
{
    Rng rng(10);
    const auto p = PolyZonotope::variable(X, 0.0, 0.1);
    const auto s = pz_taylor(AnalyticFunction::sin(), p, {6, 100});
    const auto b = pz_bounds(s);
    for (int trial = 0; trial < 10000; ++trial) {
        const double x = rng.uniform();
        const Eigen::VectorXd v = Eigen::VectorXd::Constant(1, std::sin(0.1 * x));
        ASSERT_TRUE(inside(b, v, 0.0));
        // pointwise: the polynomial at x plus the remainder box encloses sin
        ASSERT_LE(std::abs(s.evaluate(std::map<IndeterminateId, double>{{X, x}})[0] - v[0]), s.box()[0] + 1e-16);
    }
}

TEST(PzTaylor, MultiVariableContainment)
{
    Rng rng(11);
    const std::vector<IndeterminateId> ids{X, K0, Y};
    Eigen::MatrixXi E = Eigen::MatrixXi::Identity(3, 3);
    const PolyZonotope q(1, 1, Eigen::VectorXd::Constant(1, 0.8), Eigen::RowVector3d(0.05, 0.04, 0.01), E, ids,
                         Eigen::VectorXd::Constant(1, 0.002));
    for (auto f : {AnalyticFunction::sin(), AnalyticFunction::cos()}) {
        const auto out = pz_taylor(f, q, {6, 100});
        for (int trial = 0; trial < 10000; ++trial) {
            const auto x = random_assignment(rng, ids);
            const double qv = q.evaluate(x)[0] + 0.002 * rng.uniform();
            const double fv = f.derivative(0, qv);
            ASSERT_LE(std::abs(out.evaluate(x)[0] - fv), out.box()[0] + 1e-14);
        }
    }
}

TEST(PzTaylor, RemainderShrinksWithDegree)
{
    const auto p = PolyZonotope::variable(X, 0.3, 0.5);
    for (auto f : {AnalyticFunction::sin(), AnalyticFunction::cos()}) {
        double prev = 1e300;
        for (int d = 1; d <= 10; ++d) {
            const double w = pz_taylor(f, p, {d, 100}).box()[0];
            EXPECT_LE(w, prev);
            prev = w;
        }
    }
}

TEST(PzTaylor, DegreeMustBePositive)
{
    EXPECT_THROW(pz_taylor(AnalyticFunction::sin(), PolyZonotope::scalar(0.0), {0, 10}), RangeError);
}

TEST(PzReduce, UnderBudgetUnchanged)
{
    Rng rng(12);
    const auto p = random_pz(rng, 3, 1, some_ids(), 10);
    EXPECT_EQ(pz_to_json(pz_reduce(p, 100)), pz_to_json(p));
}

TEST(PzReduce, Containment)
{
    Rng rng(13);
    const auto ids = some_ids();
    const auto p = random_pz(rng, 3, 1, ids, 60, 3, 0.05);
    for (int budget : {0, 5, 20}) {
        const auto r = pz_reduce(p, budget);
        EXPECT_LE(r.n_generators(), budget);
        for (int trial = 0; trial < 3000; ++trial) {
            const auto x = random_assignment(rng, ids);
            const Eigen::VectorXd v = sample_point(rng, p, x);
            // same dependent assignment: the reduced set must cover v with its box
            const Eigen::VectorXd dv = (v - r.evaluate(x)).cwiseAbs();
            ASSERT_TRUE((dv.array() <= r.box().array() + 1e-12).all());
        }
    }
}

TEST(PzReduce, KeepsParamGenerators)
{
    Eigen::MatrixXi E(2, 4);
    E << 1, 0, 0, 0,  // K0
        0, 1, 2, 3;   // X
    const PolyZonotope p(1, 1, Eigen::VectorXd::Zero(1), Eigen::RowVector4d(0.01, 1.0, 2.0, 3.0), E, {K0, X});
    const auto r = pz_reduce(p, 1);
    ASSERT_EQ(r.n_generators(), 1);
    EXPECT_EQ(r.ids().front(), K0);
    EXPECT_DOUBLE_EQ(r.box()[0], 6.0);
}

TEST(PzReduce, PureBoxUnchanged)
{
    IntervalMatrix z(3, 1);
    z[0] = Interval(-1, 1);
    z[1] = Interval(0, 2);
    z[2] = Interval(1, 4);
    const auto p = pz_from_interval(z, fresh_ids(3));
    const auto r = pz_reduce(p, 0);
    const auto a = pz_bounds(p), b = pz_bounds(r);
    EXPECT_EQ(a.inf, b.inf);
    EXPECT_EQ(a.sup, b.sup);
}

TEST(PzGrad, Linear)
{
    const auto p = PolyZonotope::variable(K0, 3.0, 2.0);
    for (double k : {-1.0, 0.2, 0.9})
        EXPECT_DOUBLE_EQ(pz_grad_k(p, BoundSide::sup, Eigen::VectorXd::Constant(1, k))[0], 2.0);
}

TEST(PzGrad, AbsKinkHasZeroSubgradient)
{
    // 1 * x_k * f: after slicing, |k| enters the bounds
    Eigen::MatrixXi E(2, 1);
    E << 1, 1;
    const PolyZonotope p(1, 1, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0), E, {K0, fresh_id()});
    EXPECT_EQ(pz_grad_k(p, BoundSide::sup, Eigen::VectorXd::Zero(1))[0], 0.0);
    EXPECT_EQ(pz_grad_k(p, BoundSide::sup, Eigen::VectorXd::Constant(1, 0.5))[0], 1.0);
    EXPECT_EQ(pz_grad_k(p, BoundSide::inf, Eigen::VectorXd::Constant(1, -0.5))[0], 1.0);
}

TEST(PzGrad, MixedExponentsRejected)
{
    Eigen::MatrixXi E(3, 1);
    E << 1, 1, 1;
    const PolyZonotope p(1, 1, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0), E, {K0, X, Y});
    EXPECT_THROW(pz_grad_k(p, BoundSide::sup, Eigen::VectorXd::Zero(1)), StructureError);
    EXPECT_NO_THROW(pz_grad_k(pz_make_k_independent(p, 1), BoundSide::sup, Eigen::VectorXd::Zero(1)));
}

TEST(PzGrad, MatchesFiniteDifferences)
{
    Rng rng(14);
    const auto ids = some_ids();
    int checked = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto p = pz_make_k_independent(random_pz(rng, 1, 1, ids, 12, 3, 0.1), 2);
        const SlicedBounds sb(p, 2);
        const Eigen::VectorXd k = rng.vector(2, -0.9, 0.9);
        for (auto side : {BoundSide::sup, BoundSide::inf}) {
            const Eigen::VectorXd g = pz_grad_k(p, side, k);
            const bool up = side == BoundSide::sup;
            for (int j = 0; j < 2; ++j) {
                const double h = 1e-6;
                Eigen::VectorXd kp = k, km = k;
                kp[j] += h;
                km[j] -= h;
                const double fd = (sb.bound(0, up, kp) - sb.bound(0, up, km)) / (2 * h);
                ASSERT_NEAR(g[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
                ++checked;
            }
        }
    }
    EXPECT_EQ(checked, 200);
}

TEST(SlicedBounds, EqualsBoundsOfSlice)
{
    Rng rng(15);
    const auto ids = some_ids();
    const auto p = random_pz(rng, 3, 1, ids, 25, 3, 0.1);
    const SlicedBounds sb(p, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd k = rng.vector(2);
        const auto b = pz_bounds(pz_slice_k(p, k));
        for (int d = 0; d < 3; ++d) {
            EXPECT_NEAR(sb.sup(d, k), b.sup[d], 1e-12);
            EXPECT_NEAR(sb.inf(d, k), b.inf[d], 1e-12);
            EXPECT_GE(sb.max_sup(d), b.sup[d] - 1e-12);
            EXPECT_LE(sb.min_inf(d), b.inf[d] + 1e-12);
        }
    }
}

TEST(PzJson, CanonicalOrderIndependentOfInput)
{
    Eigen::MatrixXi E(2, 3);
    E << 1, 0, 2, 0, 1, 1;
    const Eigen::RowVector3d G(1.0, 2.0, 3.0);
    const PolyZonotope a(1, 1, Eigen::VectorXd::Constant(1, 0.5), G, E, {X, Y});
    Eigen::MatrixXi E2(2, 3);
    E2 << 2, 1, 0, 1, 0, 1;
    const PolyZonotope b(1, 1, Eigen::VectorXd::Constant(1, 0.5), Eigen::RowVector3d(3.0, 1.0, 2.0), E2, {X, Y});
    EXPECT_EQ(pz_to_json(a), pz_to_json(b));
    EXPECT_EQ(pz_to_json(a), R"({"shape":[1,1],"center":[0.5],"ids":["t0","ep0"],"generators":[[2.0],[1.0],[3.0]],)"
                             R"("exponents":[[0,1],[1,0],[2,1]],"box":[0.0]})");
}
