#include "armour/harness.hpp"

#include "armour/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace armour {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << std::setprecision(9);
    return f;
}

void header_cols(std::ostream& os, const std::string& prefix, int n)
{
    for (int j = 0; j < n; ++j) os << ',' << prefix << j;
}

void value_cols(std::ostream& os, const Eigen::VectorXd& v)
{
    for (Eigen::Index j = 0; j < v.size(); ++j) os << ',' << v[j];
}

std::string fixed(double v, int digits = 6)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

bool arm_clear(const RobotModel& m, const Eigen::VectorXd& q, const Zonotope3& box, double clearance)
{
    for (const auto& link : fo_point(m, q))
        if (zonotope_gap(link, box) < clearance) return false;
    return true;
}

double median(std::vector<double> v)
{
    const size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    const double hi = v[h];
    if (v.size() % 2) return hi;
    return (*std::max_element(v.begin(), v.begin() + h) + hi) / 2;
}

} // namespace

Scene gen_scene(const LoadedRobot& robot, const SceneGenOptions& o, std::uint64_t seed)
{
    if (o.n_obstacles < 0) throw RangeError("n_obstacles must be >= 0");
    if (!(o.bounds.side_min > 0) || o.bounds.side_max < o.bounds.side_min)
        throw RangeError("obstacle side range must satisfy 0 < side_min <= side_max");
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * u01(gen); };
    int attempts = 0;
    auto spend = [&](const char* what) {
        if (++attempts > o.max_attempts)
            throw GenerationError(std::string("rejection budget of ") + std::to_string(o.max_attempts) +
                                  " attempts exhausted while placing " + what);
    };

    Eigen::VectorXd qs(n), qg(n);
    for (;;) {
        spend("start and goal");
        bool ok = true;
        for (int j = 0; j < n; ++j) {
            const double lo = m.joints[j].q_lim.lo + o.joint_margin, hi = m.joints[j].q_lim.hi - o.joint_margin;
            qs[j] = uni(lo, hi);
            qg[j] = qs[j] + uni(-o.goal_max, o.goal_max);
            ok = ok && qg[j] >= lo && qg[j] <= hi;
        }
        if (ok && (qg - qs).cwiseAbs().maxCoeff() >= o.goal_min) break;
    }

    std::vector<Eigen::VectorXd> poses{qs, qg};
    if (o.clear_path)
        for (int s = 1; s < o.path_samples; ++s) poses.push_back(qs + (qg - qs) * (double(s) / o.path_samples));

    Scene sc;
    sc.robot_file = o.robot_file;
    sc.q_start = qs;
    sc.q_goal = qg;
    sc.seed = seed;
    sc.timing = o.timing;
    while (int(sc.obstacles.size()) < o.n_obstacles) {
        spend("obstacles");
        Eigen::Vector3d c, half;
        for (int d = 0; d < 3; ++d) c[d] = uni(o.bounds.lo[d], o.bounds.hi[d]);
        for (int d = 0; d < 3; ++d) half[d] = uni(o.bounds.side_min, o.bounds.side_max) / 2;
        Obstacle ob = Obstacle::box(c, half);
        if (std::all_of(poses.begin(), poses.end(),
                        [&](const Eigen::VectorXd& q) { return arm_clear(m, q, ob.zono, o.clearance); }))
            sc.obstacles.push_back(std::move(ob));
    }
    return sc;
}

EpisodeMetrics run_episode(const PlanningProblem& p, std::uint64_t seed, const std::string& name,
                           const AuditOptions& audit, EpisodeLog* log_out)
{
    const auto t0 = Clock::now();
    EpisodeLog log = receding_horizon(p, seed);
    const AuditReport rep = safety_audit(p, log, audit);

    EpisodeMetrics em;
    em.name = name;
    em.seed = seed;
    em.goal_reached = log.goal_reached;
    em.stopped = log.stopped;
    em.crashed = rep.collisions > 0;
    em.violations = rep.violations();
    em.first_violation = rep.first;
    em.iterations = int(log.iterations.size());
    em.final_distance = log.final_distance;
    em.max_r = rep.max_r;
    for (const auto& it : log.iterations) {
        em.plan_failures += !it.plan.ok();
        em.timeouts += it.plan.status == PlanStatus::timeout;
        em.mean_plan_time += it.plan.wall_time;
        em.max_plan_time = std::max(em.max_plan_time, it.plan.wall_time);
    }
    if (em.iterations) em.mean_plan_time /= em.iterations;

    em.min_clearance = std::numeric_limits<double>::infinity();
    if (!p.obstacles.empty())
        for (const auto& s : log.samples)
            for (const auto& link : fo_point(p.robot->model, s.q))
                for (const auto& ob : p.obstacles) em.min_clearance = std::min(em.min_clearance, zonotope_gap(link, ob.zono));
    em.episode_time = std::chrono::duration<double>(Clock::now() - t0).count();
    if (log_out) *log_out = std::move(log);
    return em;
}

BatchResult run_batch(const std::vector<std::string>& scene_paths, const BatchOptions& opts)
{
    std::vector<Scene> scenes;
    std::vector<std::string> names;
    for (const auto& path : scene_paths) {
        scenes.push_back(load_scene(path));
        names.push_back(fs::path(path).stem().string());
    }
    return run_batch(scenes, names, opts);
}

BatchResult run_batch(const std::vector<Scene>& scenes, const std::vector<std::string>& names,
                      const BatchOptions& opts)
{
    if (names.size() != scenes.size()) throw DimensionError("run_batch: one name per scene");
    std::map<std::string, std::unique_ptr<LoadedRobot>> robots;
    std::vector<PlanningProblem> problems;
    for (size_t i = 0; i < scenes.size(); ++i) {
        auto& slot = robots[scenes[i].robot_file];
        if (!slot) slot = std::make_unique<LoadedRobot>(load_model(scenes[i].robot_file));
        try {
            problems.push_back(make_problem(*slot, scenes[i], opts.planner));
        } catch (const ModelError& e) {
            throw ModelError(names[i] + ": " + e.what());
        }
    }

    BatchResult res;
    res.episodes.resize(scenes.size());
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (size_t i; (i = next++) < scenes.size();) {
            try {
                res.episodes[i] = run_episode(problems[i], scenes[i].seed, names[i], opts.audit);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(opts.workers, 1, std::max(1, int(scenes.size())));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    for (const auto& e : res.episodes) {
        res.goals += e.goal_reached;
        res.crashes += e.crashed;
        res.violations += e.violations;
    }
    if (!opts.out_dir.empty()) {
        fs::create_directories(opts.out_dir);
        write_metrics_csv((fs::path(opts.out_dir) / "metrics.csv").string(), res.episodes);
        write_timing_csv((fs::path(opts.out_dir) / "timing.csv").string(), res.episodes);
    }
    return res;
}

void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetrics>& m)
{
    auto f = open_out(path);
    f << "name,seed,goal_reached,stopped,crashed,violations,iterations,plan_failures,final_distance,"
         "min_clearance,max_r\n";
    for (const auto& e : m)
        f << e.name << ',' << e.seed << ',' << e.goal_reached << ',' << e.stopped << ',' << e.crashed << ','
          << e.violations << ',' << e.iterations << ',' << e.plan_failures << ',' << fixed(e.final_distance) << ','
          << fixed(e.min_clearance) << ',' << fixed(e.max_r) << '\n';
}

void write_timing_csv(const std::string& path, const std::vector<EpisodeMetrics>& m)
{
    auto f = open_out(path);
    f << "name,iterations,timeouts,mean_plan_time,max_plan_time,episode_time\n";
    for (const auto& e : m)
        f << e.name << ',' << e.iterations << ',' << e.timeouts << ',' << e.mean_plan_time << ','
          << e.max_plan_time << ',' << e.episode_time << '\n';
}

void export_plots(const PlanningProblem& p, const EpisodeLog& log, const std::string& out_dir,
                  const ExportOptions& opts)
{
    const LoadedRobot& robot = *p.robot;
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    const auto ub = uniform_bounds(p.config.cfg);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    auto tr = open_out((dir / "tracking.csv").string());
    tr << "t";
    header_cols(tr, "q", n);
    header_cols(tr, "q_d", n);
    header_cols(tr, "e", n);
    header_cols(tr, "ed", n);
    tr << ",r_norm,eps\n";
    auto in = open_out((dir / "inputs.csv").string());
    in << "t";
    header_cols(in, "u", n);
    header_cols(in, "v", n);
    header_cols(in, "u_lo", n);
    header_cols(in, "u_hi", n);
    in << '\n';
    Eigen::VectorXd u_lo(n), u_hi(n);
    for (int j = 0; j < n; ++j) u_lo[j] = m.joints[j].u_lim.lo, u_hi[j] = m.joints[j].u_lim.hi;
    for (const auto& s : log.samples) {
        tr << s.t;
        value_cols(tr, s.q);
        value_cols(tr, s.q_d);
        value_cols(tr, s.q_d - s.q);
        value_cols(tr, s.qd_d - s.qd);
        tr << ',' << s.r_norm << ',' << ub.eps << '\n';
        if (!s.u.size()) continue;
        in << s.t;
        value_cols(in, s.u);
        value_cols(in, s.v.size() ? s.v : Eigen::VectorXd::Zero(n));
        value_cols(in, u_lo);
        value_cols(in, u_hi);
        in << '\n';
    }

    auto its = open_out((dir / "iterations.csv").string());
    its << "iteration,status,cost,max_violation,n_constraints,solver_iterations";
    header_cols(its, "waypoint", n);
    header_cols(its, "k", n);
    its << '\n';
    for (const auto& it : log.iterations) {
        its << it.iteration << ',' << to_string(it.plan.status) << ',' << it.plan.cost << ','
            << it.plan.max_violation << ',' << it.plan.n_constraints << ',' << it.plan.solver_iterations;
        value_cols(its, it.waypoint);
        if (it.plan.k)
            value_cols(its, *it.plan.k);
        else
            for (int j = 0; j < n; ++j) its << ',';
        its << '\n';
    }

    if (!opts.fo_boxes) return;
    auto fo = open_out((dir / "fo_boxes.csv").string());
    fo << "iteration,step,t_lo,t_hi,link,x_lo,y_lo,z_lo,x_hi,y_hi,z_hi\n";
    const ReachProblem rp{&m, &robot.nominal, &robot.interval, p.config.cfg, p.config.reach};
    const TimeGrid grid = time_partition(p.timing.t_f, p.timing.n_t);
    int last = -1;
    for (const auto& seg : log.segments) {
        if (seg.braking || seg.iteration == last) continue;
        last = seg.iteration;
        const auto bundles = build_bundles(rp, seg.init, seg.shape, grid, p.config.threads);
        for (int i = 0; i < grid.n_t; ++i)
            for (int j = 0; j < n; ++j) {
                const auto b = pz_bounds(pz_slice_k(bundles[i].fo[j], seg.k));
                fo << seg.iteration << ',' << i << ',' << grid.lo(i) << ',' << grid.hi(i) << ',' << j;
                value_cols(fo, b.inf);
                value_cols(fo, b.sup);
                fo << '\n';
            }
    }
}

CompareReport compare_controllers(const LoadedRobot& robot, const CompareOptions& o)
{
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    if (o.levels.empty() || o.trials < 1) throw RangeError("compare_controllers: need levels and trials");

    struct Trial {
        InitialCondition init;
        Eigen::VectorXd k, e0, ed0;
    };
    std::mt19937_64 gen(o.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto vec = [&](double s) {
        Eigen::VectorXd v(n);
        for (int j = 0; j < n; ++j) v[j] = s * u(gen);
        return v;
    };
    auto signs = [&](double s) {
        Eigen::VectorXd v(n);
        for (int j = 0; j < n; ++j) v[j] = u(gen) < 0 ? -s : s;
        return v;
    };
    std::vector<Trial> trials;
    for (int t = 0; t < o.trials; ++t) {
        Trial tr;
        tr.init = {vec(1.0), vec(0.5), Eigen::VectorXd::Zero(n)};
        tr.k = vec(1.0);
        tr.e0 = signs(o.e0);
        tr.ed0 = signs(o.ed0);
        trials.push_back(std::move(tr));
    }

    ControllerConfig cfg;
    cfg.Kr = robot.controller.Kr.size() ? robot.controller.Kr : Eigen::VectorXd::Constant(n, 5.0);
    cfg.V_M = robot.controller.V_M;
    cfg.alpha_c = robot.controller.alpha_c;

    CompareReport rep;
    for (double level : o.levels) {
        const auto params = make_interval_params(robot.nominal, Uncertainty{level, level, 0.0});
        const auto eb = eigen_bounds(m, params, o.eigen_samples, o.seed);
        cfg.sigma_m = eb.sigma_m;
        cfg.sigma_M = eb.sigma_M;
        CompareLevel row{level, eb.sigma_m, eb.sigma_M, uniform_bounds(cfg).eps, Eigen::VectorXd(n), Eigen::VectorXd(n)};
        std::vector<std::vector<double>> a(n), b(n);
        for (int t = 0; t < o.trials; ++t) {
            const Trial& tr = trials[t];
            const InertialParams truth = sample_params(params, o.seed * 7919 + t, true);
            const auto traj = bernstein_coeffs(tr.init, tr.k, TrajectoryShape::centered(tr.init, o.eta1), o.t_f);
            SimOptions so;
            so.dt = o.dt;
            so.t_end = o.t_f;
            so.e0 = tr.e0;
            so.ed0 = tr.ed0;
            so.kappa = baseline_kappa(cfg);
            so.phi = o.phi;
            for (auto law : {ControlLaw::armour, ControlLaw::baseline}) {
                so.law = law;
                SimLog sim;
                for (so.dt = o.dt;; so.dt /= 2) {
                    try {
                        sim = simulate_closed_loop(m, truth, traj, robot.nominal, params, cfg, so);
                        break;
                    } catch (const SingularityError&) {
                        if (so.dt < o.min_dt) throw;
                    }
                }
                Eigen::VectorXd peak = Eigen::VectorXd::Zero(n);
                for (const auto& s : sim.samples) peak = peak.cwiseMax(s.v.cwiseAbs());
                for (int j = 0; j < n; ++j) (law == ControlLaw::armour ? a : b)[j].push_back(peak[j]);
            }
        }
        for (int j = 0; j < n; ++j) {
            row.armour[j] = median(a[j]);
            row.baseline[j] = median(b[j]);
        }
        rep.levels.push_back(std::move(row));
    }

    const auto& first = rep.levels.front();
    rep.slower_growth = rep.levels.size() > 1;
    rep.smaller_above = true;
    for (size_t i = 0; i < rep.levels.size(); ++i) {
        const auto& r = rep.levels[i];
        for (int j = 0; j < n; ++j) {
            if (i > 0 && !(r.armour[j] - first.armour[j] < r.baseline[j] - first.baseline[j]))
                rep.slower_growth = false;
            if (r.level >= 0.05 - 1e-12 && !(r.armour[j] < r.baseline[j])) rep.smaller_above = false;
        }
    }
    return rep;
}

void write_compare_csv(const std::string& path, const CompareReport& r)
{
    auto f = open_out(path);
    const int n = r.levels.empty() ? 0 : int(r.levels.front().armour.size());
    f << "level,sigma_m,sigma_M,eps";
    header_cols(f, "armour", n);
    header_cols(f, "baseline", n);
    f << '\n';
    for (const auto& l : r.levels) {
        f << l.level << ',' << l.sigma_m << ',' << l.sigma_M << ',' << l.eps;
        value_cols(f, l.armour);
        value_cols(f, l.baseline);
        f << '\n';
    }
}

} // namespace armour
