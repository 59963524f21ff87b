#pragma once

#include "armour/interval.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace armour {

struct Limits {
    double lo = 0.0;
    double hi = 0.0;
};

struct Zonotope3 {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    Eigen::Matrix<double, 3, Eigen::Dynamic> generators;  // 3 x n_g

    int n_generators() const { return static_cast<int>(generators.cols()); }
    // Support-function bounds of each coordinate.
    Eigen::Vector3d radius() const;
};

struct Joint {
    Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // in the joint's own frame
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // p_j^{j-1}
    Eigen::Matrix3d fixed_rotation = Eigen::Matrix3d::Identity();
    Limits q_lim{-1e9, 1e9};
    Limits qd_lim{-1e9, 1e9};
    Limits u_lim{-1e9, 1e9};
};

struct RobotModel {
    std::string name;
    std::vector<Joint> joints;
    std::vector<Zonotope3> links;  // link j volume in frame j
    Eigen::Vector3d gravity{0.0, 0.0, -9.81};
    Eigen::Vector3d ee_offset = Eigen::Vector3d::Zero();  // tool point in the last frame

    int n_q() const { return static_cast<int>(joints.size()); }
    // Base linear acceleration that reproduces gravity in the recursion.
    Eigen::Vector3d base_accel() const { return -gravity; }
    void validate() const;
};

struct LinkInertia {
    double m = 0.0;
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    Eigen::Matrix3d I = Eigen::Matrix3d::Zero();  // about the center of mass, link frame
};

struct IntervalLinkInertia {
    Interval m;
    IntervalMatrix c{3, 1};
    IntervalMatrix I{3, 3};
};

using InertialParams = std::vector<LinkInertia>;
using IntervalInertialParams = std::vector<IntervalLinkInertia>;

struct Uncertainty {
    double mass_frac = 0.0;
    double inertia_frac = 0.0;  // relative, applied to every entry of I
    double com_abs = 0.0;       // meters, symmetric per component
};

// Controller settings carried with a model file. Missing sigma values are left at 0.
struct ControllerSpec {
    Eigen::VectorXd Kr;
    double V_M = 1e-2;
    double alpha_c = 1.0;
    double sigma_m = 0.0;
    double sigma_M = 0.0;
};

struct LoadedRobot {
    RobotModel model;
    InertialParams nominal;
    IntervalInertialParams interval;
    Uncertainty uncertainty;
    ControllerSpec controller;
};

LoadedRobot load_model(const std::string& path);
LoadedRobot parse_model(const std::string& json_text, const std::string& origin = "<string>");

IntervalInertialParams make_interval_params(const InertialParams& nominal, const Uncertainty& u);
IntervalInertialParams degenerate_params(const InertialParams& nominal);
bool params_contain(const IntervalInertialParams& iv, const InertialParams& p);
InertialParams midpoint_params(const IntervalInertialParams& iv);

// Uniform draw from [Delta]; endpoints = true draws each component at lo or hi.
// I is kept symmetric; draws that are not PSD are retried.
InertialParams sample_params(const IntervalInertialParams& iv, std::uint64_t seed, bool endpoints = false);

struct Frame {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
};

// Joint index j is zero-based here.
Frame homog_transform(const RobotModel& model, int j, double q_j);
// Frames 1..n_q in world coordinates (element j is frame j+1).
std::vector<Frame> fk_point(const RobotModel& model, const Eigen::VectorXd& q);
Eigen::Vector3d end_effector(const RobotModel& model, const Eigen::VectorXd& q);
std::vector<Zonotope3> fo_point(const RobotModel& model, const Eigen::VectorXd& q);

struct EigenBounds {
    double sigma_m = 0.0;
    double sigma_M = 0.0;
    double raw_min = 0.0;
    double raw_max = 0.0;
};

// Sampled eigenvalue range of M(q, Delta), widened by the margin factors.
EigenBounds eigen_bounds(const RobotModel& model, const IntervalInertialParams& params, int n_samples,
                         std::uint64_t seed = 1, double low_factor = 0.95, double high_factor = 1.05);

} // namespace armour
