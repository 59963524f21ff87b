#pragma once

#include "armour/polyzono.hpp"
#include "armour/reachsets.hpp"
#include "armour/robot.hpp"

#include <Eigen/Dense>

#include <vector>

namespace armour {

struct Halfspaces {
    Eigen::MatrixXd A;  // n_f x 3, unit rows
    Eigen::VectorXd b;

    // max(A p - b); positive means p is outside.
    double signed_max(const Eigen::Vector3d& p) const { return (A * p - b).maxCoeff(); }
};

// Boxes (three axis-aligned generators) give exactly the +-I rows. Other zonotopes use the
// facet normals from generator pair cross products.
Halfspaces obstacle_halfspaces(const Zonotope3& z);

struct Obstacle {
    Zonotope3 zono;
    Halfspaces hs;

    static Obstacle box(const Eigen::Vector3d& center, const Eigen::Vector3d& half_widths);
    static Obstacle from_zonotope(const Zonotope3& z);
    bool contains(const Eigen::Vector3d& p, double tol = 0.0) const { return hs.signed_max(p) <= tol; }
};

// -max_f inf((A FO - b)^k)_f. Negative means the sliced FO misses the obstacle.
// grad receives the gradient of the active face (lowest index on ties).
double collision_constraint(const PolyZonotope& fo, const Obstacle& obs, const Eigen::VectorXd& k,
                            Eigen::VectorXd* grad = nullptr);

enum class ConstraintKind { q_lo, q_hi, qd_lo, qd_hi, u_lo, u_hi, obstacle };

struct ConstraintInfo {
    ConstraintKind kind = ConstraintKind::q_lo;
    int step = 0;
    int joint = 0;  // link index for obstacle constraints
    int obstacle = -1;
};

struct ConstraintOptions {
    // obstacle constraints are shifted so that h <= 0 enforces h_obs <= -margin
    double obstacle_margin = 1e-6;
    bool position = true;
    bool velocity = true;
    bool input = true;
    // drop obstacle pairs that are separated for every k
    bool prune = true;
};

// All constraints h(k) <= 0 of one planning iteration, compiled for repeated evaluation.
class ConstraintSet {
public:
    ConstraintSet(const RobotModel& model, const std::vector<ReachSetBundle>& bundles,
                  const std::vector<Obstacle>& obstacles, const ConstraintOptions& opts = {});

    int size() const { return static_cast<int>(info_.size()); }
    int n_k() const { return n_k_; }
    const ConstraintInfo& info(int c) const { return info_.at(c); }
    int pruned() const { return pruned_; }

    double value(int c, const Eigen::VectorXd& k, Eigen::VectorXd* grad = nullptr) const;
    // h has size() entries; jac (optional) is size() x n_k.
    void evaluate(const Eigen::VectorXd& k, Eigen::VectorXd& h, Eigen::MatrixXd* jac = nullptr) const;
    double max_violation(const Eigen::VectorXd& k) const;

private:
    struct Entry {
        int bounds = 0;  // index into bounds_
        int row = 0;     // box constraints: row of the bounds
        int n_faces = 0; // obstacle constraints: rows row .. row + n_faces - 1
        double limit = 0.0;
    };

    int n_k_ = 0;
    double margin_ = 0.0;
    int pruned_ = 0;
    std::vector<SlicedBounds> bounds_;
    std::vector<ConstraintInfo> info_;
    std::vector<Entry> entries_;
};

} // namespace armour
