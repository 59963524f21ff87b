#pragma once

#include "armour/dynamics.hpp"
#include "armour/robot.hpp"
#include "armour/trajectory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace armour {

struct ControllerConfig {
    Eigen::VectorXd Kr;  // diagonal gains
    double V_M = 1e-2;
    double alpha_c = 1.0;
    double sigma_m = 1.0;
    double sigma_M = 1.0;

    void validate() const;
};

struct UniformBounds {
    double eps = 0.0;
    Eigen::VectorXd eps_p;
    double eps_v = 0.0;
    // 2 eps / Kr, an alternative velocity bound reported next to eps_v
    Eigen::VectorXd eps_v_alt;
};

UniformBounds uniform_bounds(const ControllerConfig& cfg);

// Settings from the model file; missing sigma values are sampled from the interval parameters.
ControllerConfig make_controller_config(const LoadedRobot& robot, int eigen_samples = 20000);

Eigen::VectorXd nominal_input(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                              const ControllerConfig& cfg);

struct Disturbance {
    IntervalMatrix w;
    Eigen::VectorXd w_M;
};

Disturbance disturbance_bound(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                              const IntervalInertialParams& params, const ControllerConfig& cfg);

double h_lower(const RobotModel& model, const TotalFeedbackState& s, const IntervalInertialParams& params,
               const ControllerConfig& cfg);

struct RobustInput {
    Eigen::VectorXd tau;  // nominal
    Eigen::VectorXd v;    // robust
    Eigen::VectorXd u;    // tau - v
    Eigen::VectorXd r;
    Eigen::VectorXd w_M;
    double gamma = 0.0;
    double h = 0.0;
};

// Below this norm r is treated as zero.
inline constexpr double kZeroR = 1e-12;

RobustInput robust_input(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                         const IntervalInertialParams& params, const ControllerConfig& cfg);

// Per-joint bound alpha_c eps (sigma_M - sigma_m) / 2 + (|w_M| + w_M_j) / 2.
Eigen::VectorXd robust_input_bound(const ControllerConfig& cfg, const Eigen::VectorXd& w_M);
double robust_input_constant(const ControllerConfig& cfg);

// Comparison input -(kappa |w_M| + phi) r and its magnitude bound.
RobustInput baseline_robust_input(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                                  const IntervalInertialParams& params, const ControllerConfig& cfg, double kappa,
                                  double phi);
double baseline_kappa(const ControllerConfig& cfg);
double baseline_ratio(double sigma_M, double sigma_m);
// |w_M| above this value makes the robust-input bound smaller than the comparison bound.
double bound_crossover(const ControllerConfig& cfg);

// max over unit c of (a.c)(b.c) estimated from random unit samples.
double sampled_max_product(const Eigen::Vector3d& a, const Eigen::Vector3d& b, int n_samples, std::uint64_t seed);

enum class ControlLaw { armour, baseline, nominal_only };

struct SimOptions {
    double dt = 1e-3;
    double t_start = 0.0;  // trajectory time of the first sample
    double t_end = -1.0;   // defaults to the trajectory horizon
    ControlLaw law = ControlLaw::armour;
    double kappa = 1.0;
    double phi = 1.0;
    // initial tracking error q(0) = q_d(0) - e0, qd(0) = qd_d(0) - ed0
    Eigen::VectorXd e0;
    Eigen::VectorXd ed0;
};

struct SimSample {
    double t = 0.0;
    Eigen::VectorXd q, qd, q_d, qd_d, qdd_d, u, v, r;
    double r_norm = 0.0;
    double h = 0.0;      // lower bound used by the controller
    double h_true = 0.0; // V_M - V(q_A, Delta) with the true parameters
};

struct SimLog {
    std::vector<SimSample> samples;

    void write_csv(const std::string& path) const;
};

// State of the plant at the start; defaults to the desired state at t = 0 when empty.
struct PlantState {
    Eigen::VectorXd q, qd;
};

SimLog simulate_closed_loop(const RobotModel& model, const InertialParams& truth, const BernsteinTrajectory& traj,
                            const InertialParams& nominal, const IntervalInertialParams& params,
                            const ControllerConfig& cfg, const SimOptions& opts = {},
                            const PlantState& start = {});

// Plant acceleration M^-1 (u - C qd - G) with the true parameters.
Eigen::VectorXd forward_dynamics(const RobotModel& model, const InertialParams& truth, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& u);

} // namespace armour
