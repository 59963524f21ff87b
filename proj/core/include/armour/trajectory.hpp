#pragma once

#include "armour/polyzono.hpp"

#include <Eigen/Dense>

#include <vector>

namespace armour {

struct InitialCondition {
    Eigen::VectorXd q0, qd0, qdd0;

    int n_q() const { return static_cast<int>(q0.size()); }
    static InitialCondition at_rest(const Eigen::VectorXd& q);
};

struct DesiredState {
    Eigen::VectorXd q, qd, qdd;
};

// eta1 scales k, eta2 offsets it; the final position of joint j is eta1_j k_j + eta2_j.
struct TrajectoryShape {
    Eigen::VectorXd eta1;
    Eigen::VectorXd eta2;

    // eta1 = step, eta2 = q0 for every joint.
    static TrajectoryShape centered(const InitialCondition& init, double step);
};

class BernsteinTrajectory {
public:
    BernsteinTrajectory() = default;
    BernsteinTrajectory(const Eigen::MatrixXd& beta, double t_f) : beta_(beta), t_f_(t_f) {}

    int n_q() const { return static_cast<int>(beta_.rows()); }
    double t_f() const { return t_f_; }
    // n_q x 6
    const Eigen::MatrixXd& beta() const { return beta_; }

    DesiredState eval(double t) const;

private:
    Eigen::MatrixXd beta_;
    double t_f_ = 1.0;
};

BernsteinTrajectory bernstein_coeffs(const InitialCondition& init, const Eigen::VectorXd& k,
                                     const TrajectoryShape& shape, double t_f = 1.0);

// Per joint: q(s; k) = sum_m (a(j, m) + k_j b(j, m)) s^m, s = t / t_f. The form the PZs use.
struct PowerForm {
    Eigen::MatrixXd a;  // n_q x 6
    Eigen::MatrixXd b;  // n_q x 6
};
PowerForm power_form(const InitialCondition& init, const TrajectoryShape& shape, double t_f);

struct TimeGrid {
    double t_f = 1.0;
    int n_t = 1;
    double dt = 1.0;
    std::vector<PolyZonotope> steps;  // scalar PZ per step, id time(i)

    double lo(int i) const { return i * dt; }
    double hi(int i) const { return (i + 1) * dt; }
};

TimeGrid time_partition(double t_f, int n_t);

struct DesiredPz {
    std::vector<PolyZonotope> q, qd, qdd;  // per joint, scalars
};

DesiredPz desired_traj_pz(const InitialCondition& init, const TrajectoryShape& shape, const TimeGrid& grid, int i);

struct BufferedPz {
    std::vector<PolyZonotope> q, qd, qd_a, qdd_a;
};

// Error indeterminates err_pos(j), err_vel(j) stand for e_j / eps_p_j and ed_j / eps_v.
BufferedPz buffer_error_pz(const DesiredPz& d, const Eigen::VectorXd& eps_p, double eps_v, const Eigen::VectorXd& Kr);

} // namespace armour
