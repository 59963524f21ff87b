#include "armour/errors.hpp"
#include "armour/harness.hpp"
#include "armour/verify.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace armour;

namespace {

enum Exit { ok = 0, failed = 1, unsafe = 2, bad_input = 3 };

struct Common {
    std::string scene, robot, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> tp, tf;
    std::optional<int> nt;
    int samples = 0;
};

void add_timing(CLI::App* app, Common& c)
{
    app->add_option("--tp", c.tp, "planning time budget per iteration, s");
    app->add_option("--tf", c.tf, "trajectory horizon, s");
    app->add_option("--nt", c.nt, "time steps per horizon");
}

void apply_timing(const Common& c, Scene& s)
{
    if (c.tp) s.timing.t_p = *c.tp;
    if (c.tf) s.timing.t_f = *c.tf;
    if (c.nt) s.timing.n_t = *c.nt;
    if (c.seed) s.seed = *c.seed;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json metrics_json(const EpisodeMetrics& m)
{
    return {{"name", m.name},
            {"seed", m.seed},
            {"goal_reached", m.goal_reached},
            {"stopped", m.stopped},
            {"crashed", m.crashed},
            {"violations", m.violations},
            {"iterations", m.iterations},
            {"plan_failures", m.plan_failures},
            {"timeouts", m.timeouts},
            {"final_distance", m.final_distance},
            {"min_clearance", std::isinf(m.min_clearance) ? json(nullptr) : json(m.min_clearance)},
            {"max_r", m.max_r},
            {"mean_plan_time", m.mean_plan_time},
            {"max_plan_time", m.max_plan_time},
            {"first_violation", m.first_violation}};
}

int cmd_plan(const Common& c)
{
    Scene s = load_scene(c.scene);
    apply_timing(c, s);
    const LoadedRobot robot = load_model(c.robot.empty() ? s.robot_file : c.robot);
    const auto p = make_problem(robot, s, {});
    const auto init = InitialCondition::at_rest(s.q_start);
    const Eigen::VectorXd wp = straight_line_hlp(s.q_start, s.q_goal, p.config.hlp_step);
    const auto r = solve_opt(p, init, wp);
    json out{{"status", to_string(r.status)},
             {"waypoint", to_json(wp)},
             {"cost", r.cost},
             {"max_violation", r.max_violation},
             {"n_constraints", r.n_constraints},
             {"solver_iterations", r.solver_iterations},
             {"build_time", r.build_time},
             {"solve_time", r.solve_time},
             {"wall_time", r.wall_time}};
    out["k"] = r.k ? to_json(*r.k) : json(nullptr);
    std::cout << out.dump(2) << '\n';
    return r.ok() ? ok : failed;
}

int cmd_episode(const Common& c, bool fo_boxes)
{
    Scene s = load_scene(c.scene);
    apply_timing(c, s);
    const LoadedRobot robot = load_model(c.robot.empty() ? s.robot_file : c.robot);
    const auto p = make_problem(robot, s, {});
    EpisodeLog log;
    const auto m = run_episode(p, s.seed, fs::path(c.scene).stem().string(), {}, &log);
    if (!c.out_dir.empty()) {
        export_plots(p, log, c.out_dir, {fo_boxes});
        write_metrics_csv((fs::path(c.out_dir) / "metrics.csv").string(), {m});
        write_timing_csv((fs::path(c.out_dir) / "timing.csv").string(), {m});
    }
    std::cout << metrics_json(m).dump(2) << '\n';
    return m.violations ? unsafe : ok;
}

struct GenArgs {
    int count = 20;
    int obstacles = 4;
    double clearance = SceneGenOptions{}.clearance;
    bool free_path = true;
};

SceneGenOptions gen_options(const Common& c, const GenArgs& g, const std::string& robot_file)
{
    SceneGenOptions o;
    o.n_obstacles = g.obstacles;
    o.clearance = g.clearance;
    o.clear_path = g.free_path;
    o.robot_file = fs::absolute(robot_file).string();
    if (c.tp) o.timing.t_p = *c.tp;
    if (c.tf) o.timing.t_f = *c.tf;
    if (c.nt) o.timing.n_t = *c.nt;
    return o;
}

int cmd_gen(const Common& c, const GenArgs& g)
{
    const LoadedRobot robot = load_model(c.robot);
    const auto o = gen_options(c, g, c.robot);
    const std::uint64_t base = c.seed.value_or(1);
    if (c.out_dir.empty()) {
        std::cout << scene_to_json(gen_scene(robot, o, base));
        return ok;
    }
    fs::create_directories(c.out_dir);
    for (int i = 0; i < g.count; ++i) {
        const auto path = fs::path(c.out_dir) / ("scene_" + std::to_string(base + i) + ".json");
        std::ofstream(path) << scene_to_json(gen_scene(robot, o, base + i));
        std::cout << path.string() << '\n';
    }
    return ok;
}

int cmd_batch(const Common& c, const GenArgs& g, const std::vector<std::string>& files, bool generate,
              int workers)
{
    BatchOptions bo;
    bo.out_dir = c.out_dir;
    bo.workers = workers;
    BatchResult r;
    if (generate) {
        if (c.robot.empty()) throw CLI::ValidationError("--robot", "required with --generate");
        const LoadedRobot robot = load_model(c.robot);
        const auto o = gen_options(c, g, c.robot);
        const std::uint64_t base = c.seed.value_or(1);
        std::vector<Scene> scenes;
        std::vector<std::string> names;
        for (int i = 0; i < g.count; ++i) {
            scenes.push_back(gen_scene(robot, o, base + i));
            names.push_back("scene_" + std::to_string(base + i));
        }
        r = run_batch(scenes, names, bo);
    } else {
        std::vector<Scene> scenes;
        std::vector<std::string> names;
        for (const auto& f : files) {
            scenes.push_back(load_scene(f));
            apply_timing(c, scenes.back());
            if (!c.robot.empty()) scenes.back().robot_file = c.robot;
            names.push_back(fs::path(f).stem().string());
        }
        r = run_batch(scenes, names, bo);
    }
    for (const auto& e : r.episodes)
        std::printf("%-16s goal=%d stopped=%d crashed=%d violations=%ld iterations=%d max_plan=%.3fs\n", e.name.c_str(),
                    e.goal_reached, e.stopped, e.crashed, e.violations, e.iterations, e.max_plan_time);
    std::printf("goals %d/%zu, crashes %d, audit violations %ld\n", r.goals, r.episodes.size(), r.crashes,
                r.violations);
    return r.safe() ? ok : unsafe;
}

int cmd_verify(const Common& c)
{
    const LoadedRobot robot = load_model(c.robot);
    VerifyOptions o;
    if (c.samples > 0) o.samples = c.samples;
    o.seed = c.seed.value_or(1);
    bool all = true;
    for (const auto& r : verify_all(robot, o)) {
        std::printf("%-4s %-22s samples=%-7ld violations=%-4ld worst=%+.3e  %.2fs  %s\n", r.passed() ? "ok" : "FAIL",
                    r.name.c_str(), r.samples, r.violations, r.worst, r.seconds, r.detail.c_str());
        all = all && r.passed();
    }
    return all ? ok : unsafe;
}

int cmd_compare(const Common& c)
{
    const LoadedRobot robot = load_model(c.robot);
    CompareOptions o;
    if (c.samples > 0) o.trials = c.samples;
    o.seed = c.seed.value_or(1);
    const auto r = compare_controllers(robot, o);
    std::printf("%-6s %-9s %-9s %-8s %-24s %s\n", "level", "sigma_m", "sigma_M", "eps", "armour max|v|", "comparison max|v|");
    for (const auto& l : r.levels) {
        std::printf("%-6.2f %-9.5f %-9.5f %-8.5f", l.level, l.sigma_m, l.sigma_M, l.eps);
        std::string a, b;
        for (Eigen::Index j = 0; j < l.armour.size(); ++j) {
            a += (j ? " " : "") + std::to_string(l.armour[j]);
            b += (j ? " " : "") + std::to_string(l.baseline[j]);
        }
        std::printf(" %-24s %s\n", a.c_str(), b.c_str());
    }
    std::printf("slower growth: %s, smaller from 5%%: %s\n", r.slower_growth ? "yes" : "no",
                r.smaller_above ? "yes" : "no");
    if (!c.out_dir.empty()) {
        fs::create_directories(c.out_dir);
        write_compare_csv((fs::path(c.out_dir) / "compare.csv").string(), r);
    }
    return r.slower_growth && r.smaller_above ? ok : failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Reachability-based safe motion planning for manipulators"};
    app.require_subcommand(1);
    Common c;
    GenArgs g;
    std::vector<std::string> files;
    bool generate = false, no_fo = false;
    int workers = 1;

    auto* plan = app.add_subcommand("plan", "solve one planning iteration from the scene start");
    plan->add_option("--scene", c.scene, "scene JSON")->required()->check(CLI::ExistingFile);
    plan->add_option("--robot", c.robot, "robot JSON, overrides the scene's robot_file");
    plan->add_option("--seed", c.seed);
    add_timing(plan, c);

    auto* episode = app.add_subcommand("episode", "run and audit one receding-horizon episode");
    episode->add_option("--scene", c.scene, "scene JSON")->required()->check(CLI::ExistingFile);
    episode->add_option("--robot", c.robot, "robot JSON, overrides the scene's robot_file");
    episode->add_option("--seed", c.seed, "plant parameter draw, overrides the scene seed");
    episode->add_option("--out-dir", c.out_dir, "directory for the plot CSVs");
    episode->add_flag("--no-fo-boxes", no_fo, "skip rebuilding reach sets for fo_boxes.csv");
    add_timing(episode, c);

    auto* gen = app.add_subcommand("gen-scene", "generate random scenes");
    gen->add_option("--robot", c.robot, "robot JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--seed", c.seed, "first seed");
    gen->add_option("--out-dir", c.out_dir, "write scene_<seed>.json files here instead of stdout");
    gen->add_option("--count", g.count, "scenes to write with --out-dir");
    gen->add_option("--obstacles", g.obstacles, "obstacles per scene")->check(CLI::NonNegativeNumber);
    gen->add_option("--clearance", g.clearance, "minimum gap between obstacles and the arm, m");
    gen->add_flag("!--allow-blocked-path", g.free_path, "only keep start and goal poses clear");
    add_timing(gen, c);

    auto* batch = app.add_subcommand("batch", "run and audit episodes over many scenes");
    batch->add_option("scenes", files, "scene JSON files")->check(CLI::ExistingFile);
    batch->add_flag("--generate", generate, "generate --count scenes instead of reading files");
    batch->add_option("--robot", c.robot, "robot JSON");
    batch->add_option("--seed", c.seed, "first generated seed");
    batch->add_option("--count", g.count, "generated scenes");
    batch->add_option("--obstacles", g.obstacles, "obstacles per generated scene");
    batch->add_option("--clearance", g.clearance, "minimum gap between obstacles and the arm, m");
    batch->add_flag("!--allow-blocked-path", g.free_path, "only keep start and goal poses clear");
    batch->add_option("--workers", workers, "episodes in flight");
    batch->add_option("--out-dir", c.out_dir, "metrics.csv and timing.csv go here");
    add_timing(batch, c);

    auto* verify = app.add_subcommand("verify", "run the containment, bound and gradient property suites");
    verify->add_option("--robot", c.robot, "robot JSON")->required()->check(CLI::ExistingFile);
    verify->add_option("--samples", c.samples, "samples per suite");
    verify->add_option("--seed", c.seed);

    auto* compare = app.add_subcommand("compare-controllers", "robust input magnitude under growing uncertainty");
    compare->add_option("--robot", c.robot, "robot JSON")->required()->check(CLI::ExistingFile);
    compare->add_option("--samples", c.samples, "trials per uncertainty level");
    compare->add_option("--seed", c.seed);
    compare->add_option("--out-dir", c.out_dir, "directory for compare.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_input;
    }

    try {
        if (*plan) return cmd_plan(c);
        if (*episode) return cmd_episode(c, !no_fo);
        if (*gen) return cmd_gen(c, g);
        if (*batch) {
            if (!generate && files.empty()) throw CLI::ValidationError("scenes", "give scene files or --generate");
            return cmd_batch(c, g, files, generate, workers);
        }
        if (*verify) return cmd_verify(c);
        if (*compare) return cmd_compare(c);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return bad_input;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const GenerationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bad_input;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return failed;
    }
    return failed;
}
