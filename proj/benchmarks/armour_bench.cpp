#include "armour/constraints.hpp"
#include "armour/planner.hpp"
#include "armour/reachsets.hpp"

#include <benchmark/benchmark.h>

#include <numbers>
#include <string>

using namespace armour;

namespace {

std::string robot_path(int64_t which)
{
    return std::string(ARMOUR_DATA_DIR) + (which == 0 ? "/robots/planar2.json" : "/robots/spatial3.json");
}

struct Fixture {
    explicit Fixture(int64_t which) : robot(load_model(robot_path(which)))
    {
        const int n = robot.model.n_q();
        prob = {&robot.model, &robot.nominal, &robot.interval, make_controller_config(robot), {40, 6}};
        init = {Eigen::VectorXd::Constant(n, 0.3), Eigen::VectorXd::Constant(n, 0.2), Eigen::VectorXd::Zero(n)};
        shape = TrajectoryShape::centered(init, std::numbers::pi / 12);
        grid = time_partition(1.0, 100);
    }

    LoadedRobot robot;
    ReachProblem prob;
    InitialCondition init;
    TrajectoryShape shape;
    TimeGrid grid;
};

} // namespace

// nominal and interval pzrnea over one buffered step
static void BM_InputReachSet(benchmark::State& state)
{
    Fixture f(state.range(0));
    const auto ub = uniform_bounds(f.prob.cfg);
    const auto s = buffer_error_pz(desired_traj_pz(f.init, f.shape, f.grid, 50), ub.eps_p, ub.eps_v, f.prob.cfg.Kr);
    const auto trig = pz_trig(s.q, f.prob.opts);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            input_reach_set(f.robot.model, s, trig, f.robot.nominal, f.robot.interval, f.prob.cfg, f.prob.opts));
}
BENCHMARK(BM_InputReachSet)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_BuildBundle(benchmark::State& state)
{
    Fixture f(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(build_bundle(f.prob, f.init, f.shape, f.grid, 50));
}
BENCHMARK(BM_BuildBundle)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_ConstraintEvaluate(benchmark::State& state)
{
    Fixture f(0);
    const auto bundles = build_bundles(f.prob, f.init, f.shape, f.grid, 1);
    std::vector<Obstacle> obs;
    for (int i = 0; i < state.range(0); ++i)
        obs.push_back(Obstacle::box(Eigen::Vector3d(-1.5 + 0.4 * i, 1.2, 0), Eigen::Vector3d::Constant(0.1)));
    const ConstraintSet cons(f.robot.model, bundles, obs);
    const Eigen::VectorXd k = Eigen::VectorXd::Constant(2, 0.3);
    Eigen::VectorXd h;
    Eigen::MatrixXd J;
    for (auto _ : state) {
        cons.evaluate(k, h, &J);
        benchmark::DoNotOptimize(J.data());
    }
    state.counters["constraints"] = cons.size();
}
BENCHMARK(BM_ConstraintEvaluate)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

static void BM_SolveOpt(benchmark::State& state)
{
    const auto robot = load_model(robot_path(0));
    const Scene scene = load_scene(std::string(ARMOUR_DATA_DIR) + "/scenes/planar2_boxes.json");
    PlannerConfig cfg;
    cfg.threads = 1;
    const auto p = make_problem(robot, scene, cfg);
    const auto init = InitialCondition::at_rest(scene.q_start);
    for (auto _ : state) benchmark::DoNotOptimize(solve_opt(p, init, scene.q_goal));
}
BENCHMARK(BM_SolveOpt)->Unit(benchmark::kMillisecond)->Iterations(5);

BENCHMARK_MAIN();
