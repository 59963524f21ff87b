#pragma once

#include "armour/constraints.hpp"
#include "armour/controller.hpp"
#include "armour/reachsets.hpp"
#include "armour/robot.hpp"
#include "armour/solver.hpp"
#include "armour/trajectory.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace armour {

struct Timing {
    double t_p = 0.5;
    double t_f = 1.0;
    int n_t = 40;
};

struct Scene {
    std::string robot_file;  // resolved against the scene file's directory when relative
    std::vector<Obstacle> obstacles;
    Eigen::VectorXd q_start, q_goal;
    std::uint64_t seed = 0;
    Timing timing;
};

Scene parse_scene(const std::string& json_text, const std::string& origin = "<string>",
                  const std::string& base_dir = "");
Scene load_scene(const std::string& path);
std::string scene_to_json(const Scene& s);

struct PlannerConfig {
    ControllerConfig cfg;
    ReachOptions reach{40, 6};
    ConstraintOptions constraints;
    SolverOptions solver;
    double eta1 = std::numbers::pi / 48;
    double hlp_step = std::numbers::pi / 24;
    double goal_tol = 0.05;
    int max_iterations = 80;
    double sim_dt = 1e-3;
    int threads = 0;  // reach-set workers, 0 = hardware concurrency
    // extra wall-clock allowance beyond t_p for the whole planning call
    double slack = 0.0;
};

// Everything solve_opt needs besides the initial condition and waypoint.
struct PlanningProblem {
    const LoadedRobot* robot = nullptr;
    std::vector<Obstacle> obstacles;
    Eigen::VectorXd q_start, q_goal;
    Timing timing;
    PlannerConfig config;
};

PlanningProblem make_problem(const LoadedRobot& robot, const Scene& scene, const PlannerConfig& config);

enum class PlanStatus { success, infeasible, timeout, diverged };
std::string to_string(PlanStatus s);

struct PlanResult {
    PlanStatus status = PlanStatus::infeasible;
    std::optional<Eigen::VectorXd> k;  // set only on success
    double cost = 0.0;
    double max_violation = 0.0;
    int n_constraints = 0;
    int solver_iterations = 0;
    double build_time = 0.0;
    double solve_time = 0.0;
    double wall_time = 0.0;

    bool ok() const { return status == PlanStatus::success; }
};

TrajectoryShape plan_shape(const PlanningProblem& p, const InitialCondition& init);

// Reach sets, constraints and the solve, all inside the t_p budget.
PlanResult solve_opt(const PlanningProblem& p, const InitialCondition& init, const Eigen::VectorXd& waypoint);

// Next waypoint: current stepped toward the goal by at most `step` per joint, along the segment.
Eigen::VectorXd straight_line_hlp(const Eigen::VectorXd& current, const Eigen::VectorXd& goal, double step);

struct Segment {
    int iteration = 0;
    InitialCondition init;
    TrajectoryShape shape;
    Eigen::VectorXd k;
    double t_begin = 0.0;  // episode time of trajectory time 0
    double from = 0.0;     // executed trajectory-time window
    double to = 0.0;
    PlantState start;
    bool braking = false;
};

struct IterationRecord {
    int iteration = 0;
    Eigen::VectorXd waypoint;
    PlanResult plan;
};

struct EpisodeLog {
    std::vector<IterationRecord> iterations;
    std::vector<Segment> segments;
    std::vector<SimSample> samples;  // episode time
    InertialParams truth;
    bool goal_reached = false;
    bool stopped = false;  // a plan failed and the robot braked
    double final_distance = 0.0;
};

using PlanFn = std::function<PlanResult(int iteration, const InitialCondition& init, const Eigen::VectorXd& waypoint)>;

// truth is the parameter draw used by the simulated plant; by default drawn from [Delta] with seed.
// plan replaces solve_opt when set.
EpisodeLog receding_horizon(const PlanningProblem& p, std::uint64_t seed,
                            const std::optional<InertialParams>& truth = std::nullopt, const PlanFn& plan = {});

// Exact separating-axis test for two zonotopes in 3-D.
bool zonotopes_intersect(const Zonotope3& a, const Zonotope3& b, double tol = 0.0);
// Largest gap along the separating-axis candidates; negative when the sets overlap.
// A lower bound on the Euclidean distance between them.
double zonotope_gap(const Zonotope3& a, const Zonotope3& b);

struct AuditOptions {
    int refine = 10;  // resimulate every segment at sim_dt / refine
    double tol = 1e-9;
};

struct AuditReport {
    long states = 0;
    long collisions = 0;
    long position = 0;
    long velocity = 0;
    long input = 0;
    long tracking = 0;  // |r| > eps
    double max_r = 0.0;
    double final_speed = 0.0;
    std::string first;

    long violations() const { return collisions + position + velocity + input + tracking; }
};

AuditReport safety_audit(const PlanningProblem& p, const EpisodeLog& log, const AuditOptions& opts = {});

} // namespace armour
