#include "armour/errors.hpp"
#include "armour/robot.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace armour;
using armour::testing::data_path;
using armour::testing::Rng;

namespace {
const double pi = std::numbers::pi;
}

TEST(LoadModel, PlanarFixture)
{
    const auto r = load_model(data_path("robots/planar2.json"));
    EXPECT_EQ(r.model.n_q(), 2);
    EXPECT_TRUE(params_contain(r.interval, r.nominal));
    EXPECT_DOUBLE_EQ(r.interval[0].m.lo(), 0.97);
    EXPECT_DOUBLE_EQ(r.interval[0].m.hi(), 1.03);
}

TEST(LoadModel, ZeroUncertaintyIsDegenerate)
{
    const auto r = load_model(data_path("robots/pendulum.json"));
    EXPECT_EQ(r.interval[0].m, Interval(1.0));
    EXPECT_EQ(r.interval[0].c.rad().norm(), 0.0);
}

TEST(LoadModel, RejectsBadInput)
{
    EXPECT_THROW(parse_model("{not json"), ParseError);
    const std::string base = R"({"n_q":1,"joints":[{"axis":AXIS,"translation":[0,0,0],"q_lim":1,"qd_lim":1,"u_lim":1}],
        "links":[{"volume_center":[0,0,0],"volume_generators":[]}],
        "inertia":[{"m":1,"c":[0,0,0],"I":INERTIA}]})";
    auto fill = [&](std::string axis, std::string inertia) {
        std::string s = base;
        s.replace(s.find("AXIS"), 4, axis);
        s.replace(s.find("INERTIA"), 7, inertia);
        return s;
    };
    EXPECT_NO_THROW(parse_model(fill("[0,0,1]", "[[1,0,0],[0,1,0],[0,0,1]]")));
    EXPECT_THROW(parse_model(fill("[0,0,2]", "[[1,0,0],[0,1,0],[0,0,1]]")), ModelError);
    try {
        parse_model(fill("[0,0,1]", "[[1,0,0],[0,-1,0],[0,0,1]]"));
        FAIL();
    } catch (const ModelError& e) {
        EXPECT_NE(std::string(e.what()).find("inertia[0].I"), std::string::npos);
    }
}

TEST(LoadModel, NominalOutsideExplicitRange)
{
    const std::string s = R"({"n_q":1,"joints":[{"axis":[0,0,1],"translation":[0,0,0],"q_lim":1,"qd_lim":1,"u_lim":1}],
        "links":[{"volume_center":[0,0,0],"volume_generators":[]}],
        "inertia":[{"m":1,"m_range":[1.1,1.2],"c":[0,0,0],"I":[[1,0,0],[0,1,0],[0,0,1]]}]})";
    EXPECT_THROW(parse_model(s), ModelError);
}

TEST(IntervalParams, MassFraction)
{
    const InertialParams p{{2.0, Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity()}};
    const auto iv = make_interval_params(p, {0.03, 0.03, 0.0});
    EXPECT_DOUBLE_EQ(iv[0].m.lo(), 1.94);
    EXPECT_DOUBLE_EQ(iv[0].m.hi(), 2.06);
    for (int s = 0; s < 100; ++s) EXPECT_TRUE(params_contain(iv, sample_params(iv, s)));
    for (int s = 0; s < 100; ++s) EXPECT_TRUE(params_contain(iv, sample_params(iv, s, true)));
}

TEST(HomogTransform, ZeroAndHalfTurn)
{
    const auto r = load_model(data_path("robots/planar2.json"));
    const Frame f0 = homog_transform(r.model, 1, 0.0);
    EXPECT_TRUE(f0.R.isIdentity(1e-15));
    EXPECT_EQ(f0.p, Eigen::Vector3d(1, 0, 0));
    const Frame f = homog_transform(r.model, 0, pi);
    EXPECT_TRUE((f.R * Eigen::Vector3d::UnitX()).isApprox(-Eigen::Vector3d::UnitX(), 1e-12));
    EXPECT_TRUE((f.R * Eigen::Vector3d::UnitY()).isApprox(-Eigen::Vector3d::UnitY(), 1e-12));
    EXPECT_THROW(homog_transform(r.model, 2, 0.0), RangeError);
}

TEST(HomogTransform, Orthonormal)
{
    const auto r = load_model(data_path("robots/spatial3.json"));
    Rng rng(1);
    for (int t = 0; t < 100; ++t)
        for (int j = 0; j < 3; ++j) {
            const Frame f = homog_transform(r.model, j, rng.uniform(-10, 10));
            EXPECT_LT((f.R.transpose() * f.R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
            EXPECT_NEAR(f.R.determinant(), 1.0, 1e-12);
        }
}

TEST(FkPoint, PlanarHandGeometry)
{
    const auto r = load_model(data_path("robots/planar2.json"));
    const auto f = fk_point(r.model, Eigen::Vector2d(0, 0));
    EXPECT_TRUE(f[1].p.isApprox(Eigen::Vector3d(1, 0, 0)));
    EXPECT_TRUE(end_effector(r.model, Eigen::Vector2d(0, 0)).isApprox(Eigen::Vector3d(2, 0, 0)));
    const auto g = fk_point(r.model, Eigen::Vector2d(pi / 2, 0));
    EXPECT_LT((g[1].p - Eigen::Vector3d(0, 1, 0)).norm(), 1e-12);

    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const Eigen::Vector2d q = rng.vector(2, -pi, pi);
        const Eigen::Vector2d tip = armour::testing::planar2_tip(1, 1, q);
        const Eigen::Vector3d ee = end_effector(r.model, q);
        EXPECT_NEAR(ee.x(), tip.x(), 1e-12);
        EXPECT_NEAR(ee.y(), tip.y(), 1e-12);
        EXPECT_EQ(ee.z(), 0.0);
    }
    EXPECT_THROW(fk_point(r.model, Eigen::Vector3d::Zero()), DimensionError);
}

TEST(FkPoint, PrefixMatchesTransformProducts)
{
    const auto r = load_model(data_path("robots/spatial3.json"));
    Rng rng(3);
    const Eigen::VectorXd q = rng.vector(3, -2, 2);
    const auto f = fk_point(r.model, q);
    Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
    for (int j = 0; j < 3; ++j) {
        const Frame h = homog_transform(r.model, j, q[j]);
        Eigen::Matrix4d H = Eigen::Matrix4d::Identity();
        H.topLeftCorner<3, 3>() = h.R;
        H.topRightCorner<3, 1>() = h.p;
        T = T * H;
        EXPECT_LT((T.topLeftCorner<3, 3>() - f[j].R).norm(), 1e-12);
        EXPECT_LT((T.topRightCorner<3, 1>() - f[j].p).norm(), 1e-12);
        EXPECT_NEAR(f[j].R.determinant(), 1.0, 1e-12);
    }
}

TEST(FoPoint, SampledLinkPointsInside)
{
    const auto r = load_model(data_path("robots/spatial3.json"));
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const Eigen::VectorXd q = rng.vector(3, -2, 2);
        const auto fo = fo_point(r.model, q);
        const auto frames = fk_point(r.model, q);
        for (int j = 0; j < 3; ++j) {
            const auto& L = r.model.links[j];
            const Eigen::VectorXd beta = rng.vector(L.n_generators());
            const Eigen::Vector3d local = L.center + L.generators * beta;
            const Eigen::Vector3d world = frames[j].p + frames[j].R * local;
            // same coefficients reproduce the point in FO_j
            EXPECT_LT((fo[j].center + fo[j].generators * beta - world).norm(), 1e-12);
        }
    }
    Joint jt;
    RobotModel point;
    point.joints = {jt};
    Zonotope3 z;
    z.generators.resize(3, 0);
    point.links = {z};
    const auto fo = fo_point(point, Eigen::VectorXd::Constant(1, 0.3));
    EXPECT_EQ(fo[0].n_generators(), 0);
    EXPECT_EQ(fo[0].center, Eigen::Vector3d::Zero());
}

TEST(EigenBounds, PointMassPendulum)
{
    const auto r = load_model(data_path("robots/pendulum.json"));
    const auto b = eigen_bounds(r.model, r.interval, 200, 7, 1.0, 1.0);
    EXPECT_NEAR(b.sigma_m, 1.0, 1e-12);
    EXPECT_NEAR(b.sigma_M, 1.0, 1e-12);
    const auto c = eigen_bounds(r.model, r.interval, 200, 8, 1.0, 1.0);
    EXPECT_NEAR(b.sigma_m, c.sigma_m, 1e-9);
}

TEST(EigenBounds, PositiveOnFixtures)
{
    for (const char* f : {"robots/planar2.json", "robots/spatial3.json"}) {
        const auto r = load_model(data_path(f));
        const auto b = eigen_bounds(r.model, r.interval, 2000);
        EXPECT_GT(b.sigma_m, 0.0);
        EXPECT_LE(b.sigma_m, b.sigma_M);
        EXPECT_NEAR(b.sigma_m, 0.95 * b.raw_min, 1e-12);
    }
}
