#pragma once

#include "armour/controller.hpp"
#include "armour/dynamics.hpp"
#include "armour/polyzono.hpp"
#include "armour/robot.hpp"
#include "armour/trajectory.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace armour {

struct ReachOptions {
    int reduce_to = 100;
    int taylor_degree = 6;
};

struct PzFrame {
    PolyZonotope R;  // 3x3, world orientation of frame j
    PolyZonotope p;  // 3x1, world origin of frame j
};

struct PzTrig {
    std::vector<PolyZonotope> cos_q, sin_q;
};

PzTrig pz_trig(const std::vector<PolyZonotope>& Q, const ReachOptions& opts = {});

// Frames 1..n_q in world coordinates from per-joint position sets.
std::vector<PzFrame> pzfk(const RobotModel& model, const std::vector<PolyZonotope>& Q, const ReachOptions& opts = {});
std::vector<PzFrame> pzfk(const RobotModel& model, const PzTrig& trig, const ReachOptions& opts = {});

// FO_j = p_j + R_j L_j, one set per link. Link generators get fresh indeterminates.
std::vector<PolyZonotope> pz_forward_occupancy(const RobotModel& model, const std::vector<PzFrame>& frames,
                                               const ReachOptions& opts = {});

struct InputReachSet {
    std::vector<PolyZonotope> tau;    // nominal input, sliceable by k
    std::vector<PolyZonotope> w;      // disturbance set
    Eigen::VectorXd w_M;              // max |w| per joint over the whole step
    Eigen::VectorXd robust_bound;     // per-joint bound on |v|
    std::vector<PolyZonotope> input;  // tau - v, v on robust(j) indeterminates
};

InputReachSet input_reach_set(const RobotModel& model, const BufferedPz& state, const PzTrig& trig,
                              const InertialParams& nominal, const IntervalInertialParams& params,
                              const ControllerConfig& cfg, const ReachOptions& opts = {});

struct ReachSetBundle {
    int step = 0;
    BufferedPz state;  // Q, Qd, Qd_a, Qdd_a per joint
    PzTrig trig;
    std::vector<PzFrame> frames;
    std::vector<PolyZonotope> fo;
    InputReachSet input;
};

struct ReachProblem {
    const RobotModel* model = nullptr;
    const InertialParams* nominal = nullptr;
    const IntervalInertialParams* params = nullptr;
    ControllerConfig cfg;
    ReachOptions opts;
};

ReachSetBundle build_bundle(const ReachProblem& prob, const InitialCondition& init, const TrajectoryShape& shape,
                            const TimeGrid& grid, int i);
// All steps of the grid; threads <= 0 uses the hardware concurrency.
// Returns an empty vector if stop() turns true before every step is built.
std::vector<ReachSetBundle> build_bundles(const ReachProblem& prob, const InitialCondition& init,
                                          const TrajectoryShape& shape, const TimeGrid& grid, int threads = 0,
                                          const std::function<bool()>& stop = {});

} // namespace armour
