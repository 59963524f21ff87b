#pragma once

#include "armour/interval.hpp"
#include "armour/polyzono.hpp"
#include "armour/robot.hpp"

#include <Eigen/Dense>

#include <vector>

namespace armour {

// Arguments of the modified recursion: q, qd and the reference pair (qd_a, qdd_a).
struct RneaState {
    Eigen::VectorXd q, qd, qd_a, qdd_a;
};

// q, qd tracked; q_d, qd_d, qdd_d desired.
struct TotalFeedbackState {
    Eigen::VectorXd q, qd, q_d, qd_d, qdd_d;

    Eigen::VectorXd e() const { return q_d - q; }
    Eigen::VectorXd ed() const { return qd_d - qd; }
};

// qd_a = qd_d + Kr e, qdd_a = qdd_d + Kr ed.
RneaState modified_reference(const TotalFeedbackState& s, const Eigen::VectorXd& Kr);
// r = ed + Kr e
Eigen::VectorXd modified_error(const TotalFeedbackState& s, const Eigen::VectorXd& Kr);

Eigen::VectorXd rnea(const RobotModel& model, const RneaState& s, const InertialParams& params,
                     const Eigen::Vector3d& a0);
IntervalMatrix irnea(const RobotModel& model, const RneaState& s, const IntervalInertialParams& params,
                     const Eigen::Vector3d& a0);

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q, const InertialParams& params);
Eigen::VectorXd gravity_torque(const RobotModel& model, const Eigen::VectorXd& q, const InertialParams& params);
// Interval enclosure of M(q, Delta) r over [Delta]: irnea at (q, 0, 0, r) with zero base acceleration.
IntervalMatrix mass_times_r(const RobotModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& r,
                            const IntervalInertialParams& params);

// Per-joint PZ inputs of the set recursion. cos_q/sin_q are enclosures of cos/sin of Q.
struct PzJointState {
    std::vector<PolyZonotope> cos_q, sin_q, qd, qd_a, qdd_a;
};

struct PzLinkInertia {
    PolyZonotope m;  // scalar
    PolyZonotope c;  // 3x1
    PolyZonotope I;  // 3x3
};
using PzInertialParams = std::vector<PzLinkInertia>;

// Nominal params become point PZs; intervals become midpoint plus box.
PzInertialParams pz_params(const InertialParams& p);
PzInertialParams pz_params(const IntervalInertialParams& p);

// Rotation R_j^{j-1} as a 3x3 PZ from enclosures of cos q_j and sin q_j.
PolyZonotope pz_joint_rotation(const Joint& joint, const PolyZonotope& cos_q, const PolyZonotope& sin_q,
                               int reduce_to);

std::vector<PolyZonotope> pzrnea(const RobotModel& model, const PzJointState& s, const PzInertialParams& params,
                                 const Eigen::Vector3d& a0, int reduce_to = 100);

} // namespace armour
