#include "armour/planner.hpp"

#include "armour/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <sstream>

namespace armour {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::VectorXd vec(const json& j, const std::string& at, int n = -1)
{
    if (!j.is_array() || (n >= 0 && static_cast<int>(j.size()) != n))
        throw ParseError(at + ": expected array" + (n >= 0 ? " of " + std::to_string(n) : std::string()));
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(at + "[" + std::to_string(i) + "]: expected number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

} // namespace

Scene parse_scene(const std::string& text, const std::string& origin, const std::string& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    Scene s;
    try {
        s.robot_file = doc.at("robot_file").get<std::string>();
        if (!base_dir.empty() && std::filesystem::path(s.robot_file).is_relative())
            s.robot_file = (std::filesystem::path(base_dir) / s.robot_file).lexically_normal().string();
        s.q_start = vec(doc.at("q_start"), "q_start");
        s.q_goal = vec(doc.at("q_goal"), "q_goal", static_cast<int>(s.q_start.size()));
        s.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("timing")) {
            const auto& t = doc["timing"];
            s.timing.t_p = t.value("t_p", s.timing.t_p);
            s.timing.t_f = t.value("t_f", s.timing.t_f);
            s.timing.n_t = t.value("n_t", s.timing.n_t);
        }
        if (!(s.timing.t_p > 0 && s.timing.t_p < s.timing.t_f)) throw ModelError("timing: need 0 < t_p < t_f");
        if (s.timing.n_t < 1) throw ModelError("timing.n_t: must be positive");
        const auto& obs = doc.value("obstacles", json::array());
        for (size_t i = 0; i < obs.size(); ++i) {
            const std::string at = "obstacles[" + std::to_string(i) + "]";
            const Eigen::VectorXd c = vec(obs[i].at("center"), at + ".center", 3);
            try {
                if (obs[i].contains("half_widths")) {
                    s.obstacles.push_back(Obstacle::box(c, vec(obs[i]["half_widths"], at + ".half_widths", 3)));
                } else {
                    const auto& g = obs[i].at("generators");
                    Zonotope3 z;
                    z.center = c;
                    z.generators.resize(3, static_cast<Eigen::Index>(g.size()));
                    for (size_t k = 0; k < g.size(); ++k)
                        z.generators.col(static_cast<Eigen::Index>(k)) =
                            vec(g[k], at + ".generators[" + std::to_string(k) + "]", 3);
                    s.obstacles.push_back(Obstacle::from_zonotope(z));
                }
            } catch (const DegeneracyError& e) {
                throw ModelError(at + ": " + e.what());
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(origin + ": " + e.what());
    } catch (const ModelError& e) {
        throw ModelError(origin + ": " + e.what());
    }
    return s;
}

Scene load_scene(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scene(ss.str(), path, std::filesystem::path(path).parent_path().string());
}

std::string scene_to_json(const Scene& s)
{
    json doc;
    doc["robot_file"] = s.robot_file;
    doc["q_start"] = to_json(s.q_start);
    doc["q_goal"] = to_json(s.q_goal);
    doc["seed"] = s.seed;
    doc["timing"] = {{"t_p", s.timing.t_p}, {"t_f", s.timing.t_f}, {"n_t", s.timing.n_t}};
    json obs = json::array();
    for (const auto& o : s.obstacles) {
        json j;
        j["center"] = to_json(o.zono.center);
        const Eigen::MatrixXd& G = o.zono.generators;
        const bool box = G.cols() == 3 && Eigen::MatrixXd(G).isDiagonal(0.0);
        if (box) {
            j["half_widths"] = to_json(G.diagonal().cwiseAbs());
        } else {
            json g = json::array();
            for (Eigen::Index c = 0; c < G.cols(); ++c) g.push_back(to_json(G.col(c)));
            j["generators"] = g;
        }
        obs.push_back(j);
    }
    doc["obstacles"] = obs;
    return doc.dump(2) + "\n";
}

PlanningProblem make_problem(const LoadedRobot& robot, const Scene& scene, const PlannerConfig& config)
{
    const int n = robot.model.n_q();
    if (scene.q_start.size() != n || scene.q_goal.size() != n)
        throw ModelError("scene: q_start and q_goal must have n_q entries");
    PlanningProblem p{&robot, scene.obstacles, scene.q_start, scene.q_goal, scene.timing, config};
    if (p.config.cfg.Kr.size() == 0) p.config.cfg = make_controller_config(robot);
    for (const auto& link : fo_point(robot.model, scene.q_start))
        for (size_t o = 0; o < scene.obstacles.size(); ++o)
            if (zonotopes_intersect(link, scene.obstacles[o].zono))
                throw ModelError("scene: q_start collides with obstacles[" + std::to_string(o) + "]");
    return p;
}

std::string to_string(PlanStatus s)
{
    switch (s) {
    case PlanStatus::success: return "success";
    case PlanStatus::infeasible: return "infeasible";
    case PlanStatus::timeout: return "timeout";
    case PlanStatus::diverged: return "diverged";
    }
    return "unknown";
}

TrajectoryShape plan_shape(const PlanningProblem& p, const InitialCondition& init)
{
    return TrajectoryShape::centered(init, p.config.eta1);
}

PlanResult solve_opt(const PlanningProblem& p, const InitialCondition& init, const Eigen::VectorXd& waypoint)
{
    const auto t0 = Clock::now();
    const double budget = p.timing.t_p + p.config.slack;
    const LoadedRobot& robot = *p.robot;
    const int n = robot.model.n_q();
    PlanResult out;

    const ReachProblem rp{&robot.model, &robot.nominal, &robot.interval, p.config.cfg, p.config.reach};
    const TrajectoryShape shape = plan_shape(p, init);
    const TimeGrid grid = time_partition(p.timing.t_f, p.timing.n_t);
    const auto bundles =
        build_bundles(rp, init, shape, grid, p.config.threads, [&] { return since(t0) >= budget; });
    out.build_time = since(t0);
    if (bundles.empty() || out.build_time >= budget) {
        out.status = PlanStatus::timeout;
        out.wall_time = out.build_time;
        return out;
    }
    const ConstraintSet cons(robot.model, bundles, p.obstacles, p.config.constraints);
    out.n_constraints = cons.size();
    out.build_time = since(t0);
    if (out.build_time >= budget) {
        out.status = PlanStatus::timeout;
        out.wall_time = out.build_time;
        return out;
    }

    NlpProblem nlp;
    nlp.n = n;
    nlp.lo = Eigen::VectorXd::Constant(n, -1.0);
    nlp.hi = Eigen::VectorXd::Constant(n, 1.0);
    const Eigen::VectorXd eta1 = shape.eta1, eta2 = shape.eta2;
    nlp.cost = [&](const Eigen::VectorXd& k, Eigen::VectorXd* g) {
        const Eigen::VectorXd d = eta1.cwiseProduct(k) + eta2 - waypoint;
        if (g) *g = 2 * eta1.cwiseProduct(d);
        return d.squaredNorm();
    };
    nlp.constraints = [&](const Eigen::VectorXd& k, Eigen::VectorXd& h, Eigen::MatrixXd* J) { cons.evaluate(k, h, J); };
    SolverOptions so = p.config.solver;
    so.time_limit = budget - out.build_time;
    const auto r = AugmentedLagrangianSolver().solve(nlp, Eigen::VectorXd::Zero(n), so);

    out.solve_time = r.wall_time;
    out.cost = r.cost;
    out.max_violation = r.max_violation;
    out.solver_iterations = r.inner_iterations;
    switch (r.status) {
    case SolveStatus::success:
        out.status = PlanStatus::success;
        out.k = r.x;
        break;
    case SolveStatus::infeasible: out.status = PlanStatus::infeasible; break;
    case SolveStatus::timeout: out.status = PlanStatus::timeout; break;
    case SolveStatus::diverged: out.status = PlanStatus::diverged; break;
    }
    out.wall_time = since(t0);
    return out;
}

Eigen::VectorXd straight_line_hlp(const Eigen::VectorXd& current, const Eigen::VectorXd& goal, double step)
{
    if (current.size() != goal.size()) throw DimensionError("straight_line_hlp: size mismatch");
    const Eigen::VectorXd d = goal - current;
    const double m = d.cwiseAbs().maxCoeff();
    if (m <= step) return goal;
    return current + (step / m) * d;
}

namespace {

struct Executed {
    SimLog log;
    Segment seg;
};

Executed execute(const PlanningProblem& p, const InertialParams& truth, const Segment& seg)
{
    const LoadedRobot& r = *p.robot;
    const auto traj = bernstein_coeffs(seg.init, seg.k, seg.shape, p.timing.t_f);
    SimOptions o;
    o.dt = p.config.sim_dt;
    o.t_start = seg.from;
    o.t_end = seg.to;
    return {simulate_closed_loop(r.model, truth, traj, r.nominal, r.interval, p.config.cfg, o, seg.start), seg};
}

void append(EpisodeLog& log, Executed&& ex)
{
    const bool skip_first = !log.samples.empty();
    for (size_t i = skip_first ? 1 : 0; i < ex.log.samples.size(); ++i) {
        SimSample s = std::move(ex.log.samples[i]);
        s.t += ex.seg.t_begin;
        log.samples.push_back(std::move(s));
    }
    log.segments.push_back(std::move(ex.seg));
}

PlantState last_state(const EpisodeLog& log) { return {log.samples.back().q, log.samples.back().qd}; }

} // namespace

EpisodeLog receding_horizon(const PlanningProblem& p, std::uint64_t seed, const std::optional<InertialParams>& truth,
                            const PlanFn& plan_fn)
{
    const PlanFn solve = plan_fn ? plan_fn : PlanFn([&p](int, const InitialCondition& init, const Eigen::VectorXd& wp) {
        return solve_opt(p, init, wp);
    });
    const LoadedRobot& robot = *p.robot;
    EpisodeLog log;
    log.truth = truth ? *truth : sample_params(robot.interval, seed);
    const double tp = p.timing.t_p, tf = p.timing.t_f;

    InitialCondition init = InitialCondition::at_rest(p.q_start);
    Eigen::VectorXd wp = straight_line_hlp(init.q0, p.q_goal, p.config.hlp_step);
    PlanResult plan = solve(0, init, wp);
    log.iterations.push_back({0, wp, plan});
    if (!plan.ok()) {
        log.stopped = true;
        log.samples.push_back({});
        log.samples.back().q = p.q_start;
        log.samples.back().qd = Eigen::VectorXd::Zero(robot.model.n_q());
        log.final_distance = (p.q_start - p.q_goal).cwiseAbs().maxCoeff();
        log.goal_reached = log.final_distance < p.config.goal_tol;
        return log;
    }
    Segment cur{0, init, plan_shape(p, init), *plan.k, 0.0, 0.0, tp, {p.q_start, Eigen::VectorXd::Zero(robot.model.n_q())},
                false};

    for (int it = 1;; ++it) {
        const Eigen::VectorXd q_end = cur.shape.eta1.cwiseProduct(cur.k) + cur.shape.eta2;
        if ((q_end - p.q_goal).cwiseAbs().maxCoeff() < 0.2 * p.config.goal_tol || it > p.config.max_iterations) {
            // final trajectory ends at rest; run it out
            cur.to = tf;
            append(log, execute(p, log.truth, cur));
            break;
        }
        const auto traj = bernstein_coeffs(cur.init, cur.k, cur.shape, tf);
        const DesiredState d = traj.eval(tp);
        const InitialCondition next{d.q, d.qd, d.qdd};
        wp = straight_line_hlp(next.q0, p.q_goal, p.config.hlp_step);

        auto tracking = std::async(std::launch::async, [&p, &log, cur] { return execute(p, log.truth, cur); });
        plan = solve(it, next, wp);
        append(log, tracking.get());
        log.iterations.push_back({it, wp, plan});

        if (!plan.ok()) {
            Segment brake = cur;
            brake.from = tp;
            brake.to = tf;
            brake.braking = true;
            brake.start = last_state(log);
            append(log, execute(p, log.truth, brake));
            log.stopped = true;
            break;
        }
        cur = Segment{it, next, plan_shape(p, next), *plan.k, cur.t_begin + tp, 0.0, tp, last_state(log), false};
    }
    log.final_distance = (log.samples.back().q - p.q_goal).cwiseAbs().maxCoeff();
    log.goal_reached = !log.stopped && log.final_distance < p.config.goal_tol;
    return log;
}

namespace {

std::vector<Eigen::Vector3d> sat_axes(const Zonotope3& a, const Zonotope3& b)
{
    std::vector<Eigen::Vector3d> axes{Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ()};
    std::vector<Eigen::Vector3d> dirs;
    for (const auto* z : {&a, &b})
        for (int g = 0; g < z->n_generators(); ++g)
            if (z->generators.col(g).norm() > 0) dirs.push_back(z->generators.col(g));
    for (size_t i = 0; i < dirs.size(); ++i)
        for (size_t j = i + 1; j < dirs.size(); ++j) {
            const Eigen::Vector3d n = dirs[i].cross(dirs[j]);
            if (n.norm() > 1e-12 * dirs[i].norm() * dirs[j].norm()) axes.push_back(n.normalized());
        }
    return axes;
}

double axis_gap(const Zonotope3& a, const Zonotope3& b, const Eigen::Vector3d& n)
{
    const double ra = (a.generators.transpose() * n).cwiseAbs().sum();
    const double rb = (b.generators.transpose() * n).cwiseAbs().sum();
    return std::abs(a.center.dot(n) - b.center.dot(n)) - ra - rb;
}

} // namespace

bool zonotopes_intersect(const Zonotope3& a, const Zonotope3& b, double tol)
{
    for (const auto& n : sat_axes(a, b))
        if (axis_gap(a, b, n) > tol) return false;
    return true;
}

double zonotope_gap(const Zonotope3& a, const Zonotope3& b)
{
    double gap = -std::numeric_limits<double>::infinity();
    for (const auto& n : sat_axes(a, b)) gap = std::max(gap, axis_gap(a, b, n));
    return gap;
}

AuditReport safety_audit(const PlanningProblem& p, const EpisodeLog& log, const AuditOptions& opts)
{
    const LoadedRobot& robot = *p.robot;
    const RobotModel& m = robot.model;
    const double eps = uniform_bounds(p.config.cfg).eps;
    AuditReport rep;
    auto note = [&](const std::string& what, double t) {
        if (rep.first.empty()) rep.first = what + " at t=" + std::to_string(t);
    };
    auto check = [&](const SimSample& s, double t) {
        ++rep.states;
        for (int j = 0; j < m.n_q(); ++j) {
            const Joint& jt = m.joints[j];
            if (s.q[j] < jt.q_lim.lo - opts.tol || s.q[j] > jt.q_lim.hi + opts.tol) ++rep.position, note("position", t);
            if (s.qd[j] < jt.qd_lim.lo - opts.tol || s.qd[j] > jt.qd_lim.hi + opts.tol)
                ++rep.velocity, note("velocity", t);
            if (s.u.size() && (s.u[j] < jt.u_lim.lo - opts.tol || s.u[j] > jt.u_lim.hi + opts.tol))
                ++rep.input, note("input", t);
        }
        if (s.r.size()) {
            rep.max_r = std::max(rep.max_r, s.r_norm);
            if (s.r_norm > eps + opts.tol) ++rep.tracking, note("tracking", t);
        }
        const auto links = fo_point(m, s.q);
        for (size_t j = 0; j < links.size(); ++j)
            for (size_t o = 0; o < p.obstacles.size(); ++o)
                if (zonotopes_intersect(links[j], p.obstacles[o].zono))
                    ++rep.collisions, note("collision link " + std::to_string(j) + " obstacle " + std::to_string(o), t);
    };
    for (const auto& s : log.samples) check(s, s.t);
    if (opts.refine > 0)
        for (const auto& seg : log.segments) {
            const auto traj = bernstein_coeffs(seg.init, seg.k, seg.shape, p.timing.t_f);
            SimOptions o;
            o.dt = p.config.sim_dt / opts.refine;
            o.t_start = seg.from;
            o.t_end = seg.to;
            const auto dense =
                simulate_closed_loop(m, log.truth, traj, robot.nominal, robot.interval, p.config.cfg, o, seg.start);
            for (const auto& s : dense.samples) check(s, seg.t_begin + s.t);
        }
    if (!log.samples.empty() && log.samples.back().qd.size()) rep.final_speed = log.samples.back().qd.cwiseAbs().maxCoeff();
    return rep;
}

} // namespace armour
