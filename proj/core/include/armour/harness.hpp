#pragma once

#include "armour/planner.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace armour {

struct SceneBounds {
    Eigen::Vector3d lo{-1.8, -1.8, 0.0};  // obstacle centers
    Eigen::Vector3d hi{1.8, 1.8, 0.0};
    double side_min = 0.05;  // full box side lengths
    double side_max = 0.3;
};

struct SceneGenOptions {
    int n_obstacles = 3;
    SceneBounds bounds;
    // minimum separating-axis gap between any obstacle and the arm at start and goal
    double clearance = 0.2;
    // also keep the straight joint-space segment from start to goal clear, sampled this often
    bool clear_path = true;
    int path_samples = 40;
    double joint_margin = 0.3;  // start and goal stay this far inside the position limits
    double goal_min = 0.5;      // joint-space max-norm distance between start and goal
    double goal_max = 1.5;
    int max_attempts = 5000;
    Timing timing;
    std::string robot_file;
};

// Deterministic in seed. Throws GenerationError when the rejection budget runs out.
Scene gen_scene(const LoadedRobot& robot, const SceneGenOptions& opts, std::uint64_t seed);

struct EpisodeMetrics {
    std::string name;
    std::uint64_t seed = 0;
    bool goal_reached = false;
    bool stopped = false;
    bool crashed = false;  // any audit collision
    long violations = 0;   // all audit findings, collisions included
    int iterations = 0;
    int plan_failures = 0;
    int timeouts = 0;
    double final_distance = 0.0;
    double min_clearance = 0.0;  // separating-axis lower bound over the audited states, m
    double max_r = 0.0;
    double mean_plan_time = 0.0;
    double max_plan_time = 0.0;
    double episode_time = 0.0;  // wall clock of the whole episode
    std::string first_violation;
};

// Runs an episode and audits it. Scenes without obstacles report infinite clearance.
EpisodeMetrics run_episode(const PlanningProblem& p, std::uint64_t seed, const std::string& name = "",
                           const AuditOptions& audit = {}, EpisodeLog* log_out = nullptr);

struct BatchOptions {
    PlannerConfig planner;
    AuditOptions audit;
    int workers = 1;       // episodes in flight; planning is budgeted in wall time, so keep this at the core count
    std::string out_dir;   // metrics.csv and timing.csv; empty skips writing
};

struct BatchResult {
    std::vector<EpisodeMetrics> episodes;
    int goals = 0;
    int crashes = 0;
    long violations = 0;

    bool safe() const { return crashes == 0 && violations == 0; }
};

BatchResult run_batch(const std::vector<std::string>& scene_paths, const BatchOptions& opts);
BatchResult run_batch(const std::vector<Scene>& scenes, const std::vector<std::string>& names,
                      const BatchOptions& opts);

// metrics.csv holds only seed-determined columns; timing.csv the wall-clock ones.
void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetrics>& m);
void write_timing_csv(const std::string& path, const std::vector<EpisodeMetrics>& m);

struct ExportOptions {
    bool fo_boxes = true;  // rebuilds the reach sets of every successful iteration
};

// Writes tracking.csv (one row per sample), inputs.csv (input against limits),
// fo_boxes.csv (interval hull of each link's occupancy per step, sliced at the chosen k)
// and iterations.csv.
void export_plots(const PlanningProblem& p, const EpisodeLog& log, const std::string& out_dir,
                  const ExportOptions& opts = {});

struct CompareOptions {
    std::vector<double> levels{0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    int trials = 10;
    std::uint64_t seed = 1;
    double e0 = 4.5 * std::numbers::pi / 180;  // initial position error per joint, rad
    double ed0 = 9.0 * std::numbers::pi / 180;  // initial velocity error per joint, rad/s
    double phi = 1.0;  // comparison input offset gain
    double eta1 = std::numbers::pi / 12;  // trajectory reach per joint
    int eigen_samples = 5000;
    double t_f = 1.0;
    double dt = 1e-3;
    double min_dt = 1e-5;  // stiff runs are retried at half the step down to this
};

struct CompareLevel {
    double level = 0.0;
    double sigma_m = 0.0;
    double sigma_M = 0.0;
    double eps = 0.0;
    Eigen::VectorXd armour;    // median over trials of max |v_j|
    Eigen::VectorXd baseline;
};

struct CompareReport {
    std::vector<CompareLevel> levels;
    bool slower_growth = false;   // armour rises less than baseline from the first level, every joint and level
    bool smaller_above = false;   // armour below baseline at every level >= 5%
};

// Mass and inertia uncertainty sweep with a perturbed initial state. The comparison input uses
// kappa chosen so both controllers share the same uniform bound; sigma is resampled per level.
CompareReport compare_controllers(const LoadedRobot& robot, const CompareOptions& opts = {});
void write_compare_csv(const std::string& path, const CompareReport& r);

} // namespace armour
