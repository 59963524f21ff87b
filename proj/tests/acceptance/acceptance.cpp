// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number of failures.

#include "armour/controller.hpp"
#include "armour/dynamics.hpp"
#include "armour/harness.hpp"
#include "armour/verify.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace armour;
using armour::testing::data_path;
using armour::testing::Rng;

namespace {

const double pi = std::numbers::pi;

// Pinned tolerances and budgets.
constexpr double kBoundTol = 1e-4;
constexpr double kRneaTol = 1e-9;
constexpr double kIrneaTol = 1e-12;
constexpr double kPzrneaTol = 1e-9;
constexpr double kGradRelTol = 1e-5;
constexpr double kProductTol = 1e-3;
constexpr int kSuiteSamples = 10000;
constexpr int kScenes = 20;
constexpr int kGoalTarget = 15;
constexpr double kTimeSlack = 0.05;

struct Outcome {
    bool pass = false;
    std::string summary;
};

[[gnu::format(printf, 1, 2)]] std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

std::string suite_line(const SuiteResult& r)
{
    return fmt("%s %ld/%ld clean (worst %+.2e)", r.name.c_str(), r.samples - r.violations, r.samples, r.worst);
}

ControllerConfig reference(double sigma_m, double sigma_M)
{
    ControllerConfig c;
    c.Kr = Eigen::VectorXd::Constant(7, 5.0);
    c.V_M = 1e-2;
    c.sigma_m = sigma_m;
    c.sigma_M = sigma_M;
    return c;
}

Outcome bound_arithmetic()
{
    const auto a = uniform_bounds(reference(5.09562, 15.79636));
    const auto b = uniform_bounds(reference(8.29939, 18.2726));
    const double ratio = baseline_ratio(18.2726, 8.2993);
    const double constant = robust_input_constant(reference(8.29939, 18.2726));
    // hand evaluation of sqrt(2 V_M / sigma_m) next to the reference numbers
    const double eps_a = std::sqrt(2 * 1e-2 / 5.09562), eps_b = std::sqrt(2 * 1e-2 / 8.29939);
    const bool pass = std::abs(a.eps - 0.062649) <= kBoundTol && std::abs(a.eps - eps_a) <= 1e-12 &&
                      std::abs(a.eps_p[0] - 0.01253) <= kBoundTol && std::abs(b.eps - 0.049090) <= kBoundTol &&
                      std::abs(b.eps - eps_b) <= 1e-12 && std::abs(ratio - 1.48380) <= kBoundTol;
    return {pass, fmt("eps %.6f, eps_p %.5f, eps (dumbbell) %.6f, ratio %.5f; robust constant %.4f "
                      "(reference figure 0.4895 is not reproduced by the formula, which gives 0.2448)",
                      a.eps, a.eps_p[0], b.eps, ratio, constant)};
}

Outcome controller_comparison(const LoadedRobot& planar)
{
    const auto r = compare_controllers(planar);
    const auto& lo = r.levels.front();
    const auto& hi = r.levels.back();
    return {r.slower_growth && r.smaller_above,
            fmt("median max|v| joint 1: %.3f -> %.3f (ours) vs %.3f -> %.3f (comparison) over %.0f-%.0f%%; "
                "slower growth %s, smaller from 5%% %s",
                lo.armour[0], hi.armour[0], lo.baseline[0], hi.baseline[0], 100 * lo.level, 100 * hi.level,
                r.slower_growth ? "yes" : "no", r.smaller_above ? "yes" : "no")};
}

Outcome tracking(const LoadedRobot& planar)
{
    const auto r = check_tracking(planar, 20, 3, 1e-3);
    return {r.passed(), std::string("20 trajectories, endpoint parameters, 1 kHz: ") + suite_line(r)};
}

Outcome robust_bound(const LoadedRobot& planar, const LoadedRobot& spatial)
{
    VerifyOptions o;
    o.samples = kSuiteSamples;
    o.seed = 4;
    const auto a = check_robust_bound(planar, o), b = check_robust_bound(spatial, o);
    return {a.passed() && b.passed(), "planar " + suite_line(a) + "; spatial " + suite_line(b)};
}

Outcome containment(const LoadedRobot& planar, const LoadedRobot& spatial)
{
    VerifyOptions o;
    o.samples = kSuiteSamples;
    o.seed = 5;
    std::vector<SuiteResult> all{check_interval_ops(o), check_pz_ops(o), check_taylor(o)};
    for (const auto* r : {&planar, &spatial}) {
        all.push_back(check_irnea(*r, o));
        all.push_back(check_pzrnea(*r, o));
        for (auto& s : check_reach_sets(*r, o)) all.push_back(std::move(s));
    }
    bool pass = true;
    long samples = 0, bad = 0;
    std::string failed;
    for (const auto& r : all) {
        pass = pass && r.passed();
        samples += r.samples;
        bad += r.violations;
        if (!r.passed()) failed += " " + r.name;
    }
    return {pass, fmt("%zu suites, %ld samples, %ld violations", all.size(), samples, bad) +
                      (failed.empty() ? "" : "; failing:" + failed)};
}

Outcome oracle_equivalence(const LoadedRobot& planar)
{
    const armour::testing::Planar2 ref;
    const RobotModel& m = planar.model;
    const auto deg = degenerate_params(planar.nominal);
    Rng rng(6);
    double e_rnea = 0, e_irnea = 0, e_pz = 0;
    for (int t = 0; t < 100; ++t) {
        const RneaState s{rng.vector(2, -pi, pi), rng.vector(2, -2, 2), rng.vector(2, -2, 2), rng.vector(2, -3, 3)};
        const Eigen::VectorXd u = rnea(m, s, planar.nominal, m.base_accel());
        const Eigen::Vector2d v = ref.torque(s.q, s.qd, s.qd_a, s.qdd_a);
        e_rnea = std::max(e_rnea, (u - v).cwiseAbs().maxCoeff());

        const auto iv = irnea(m, s, deg, m.base_accel());
        for (int j = 0; j < 2; ++j)
            e_irnea = std::max({e_irnea, std::abs(iv[j].lo() - u[j]), std::abs(iv[j].hi() - u[j])});

        PzJointState js;
        for (int j = 0; j < 2; ++j) {
            js.cos_q.push_back(PolyZonotope::scalar(std::cos(s.q[j])));
            js.sin_q.push_back(PolyZonotope::scalar(std::sin(s.q[j])));
            js.qd.push_back(PolyZonotope::scalar(s.qd[j]));
            js.qd_a.push_back(PolyZonotope::scalar(s.qd_a[j]));
            js.qdd_a.push_back(PolyZonotope::scalar(s.qdd_a[j]));
        }
        const auto pz = pzrnea(m, js, pz_params(planar.nominal), m.base_accel());
        for (int j = 0; j < 2; ++j) {
            const auto b = pz_bounds(pz[j]);
            e_pz = std::max({e_pz, std::abs(b.inf[0] - u[j]), std::abs(b.sup[0] - u[j])});
        }
    }
    return {e_rnea <= kRneaTol && e_irnea <= kIrneaTol && e_pz <= kPzrneaTol,
            fmt("100 states: rnea vs closed form %.1e, degenerate irnea %.1e, degenerate pzrnea %.1e", e_rnea,
                e_irnea, e_pz)};
}

Outcome gradients(const LoadedRobot& planar)
{
    const auto r = check_gradients(planar, 100, 7, kGradRelTol);
    return {r.passed(), fmt("100 (scene, k) pairs, worst excess %+.2e; ", r.worst) + r.detail};
}

Outcome unit_product()
{
    const auto r = check_unit_product(50, 100000, 8, kProductTol);
    return {r.passed(), fmt("50 pairs x 1e5 directions, worst |error| - tol %+.2e", r.worst)};
}

struct EndToEnd {
    BatchResult batch;
    double t_p = 0.5;
};

EndToEnd run_scenes(const LoadedRobot& planar)
{
    SceneGenOptions o;
    o.n_obstacles = 4;
    o.robot_file = data_path("robots/planar2.json");
    std::vector<Scene> scenes;
    std::vector<std::string> names;
    for (int s = 0; s < kScenes; ++s) {
        scenes.push_back(gen_scene(planar, o, 1000 + s));
        names.push_back("scene_" + std::to_string(1000 + s));
    }
    return {run_batch(scenes, names, {}), o.timing.t_p};
}

Outcome end_to_end(const EndToEnd& e)
{
    const auto& b = e.batch;
    const bool pass = b.crashes == 0 && b.violations == 0 && b.goals >= kGoalTarget;
    return {pass, fmt("%d scenes: %d crashes, %ld audit violations, %d/%d goals (target %d)", kScenes, b.crashes,
                      b.violations, b.goals, kScenes, kGoalTarget)};
}

Outcome timeouts(const EndToEnd& e, const LoadedRobot& planar)
{
    double worst = 0;
    int failures = 0;
    for (const auto& ep : e.batch.episodes) {
        worst = std::max(worst, ep.max_plan_time);
        failures += ep.plan_failures;
    }
    // a budget too small to build the reach sets must come back as an explicit timeout without k
    Scene s = load_scene(data_path("scenes/planar2_boxes.json"));
    s.timing.t_p = 0.01;
    const auto p = make_problem(planar, s, {});
    const auto r = solve_opt(p, InitialCondition::at_rest(s.q_start), s.q_goal);
    const bool explicit_failure = r.status == PlanStatus::timeout && !r.k && r.wall_time <= s.timing.t_p + kTimeSlack;
    return {worst <= e.t_p + kTimeSlack && explicit_failure,
            fmt("max iteration wall time %.3f s (budget %.3f s), %d failed iterations; forced t_p = 10 ms returns "
                "%s without k in %.3f s",
                worst, e.t_p + kTimeSlack, failures, to_string(r.status).c_str(), r.wall_time)};
}

} // namespace

int main()
{
    const LoadedRobot planar = load_model(data_path("robots/planar2.json"));
    const LoadedRobot spatial = load_model(data_path("robots/spatial3.json"));
    int failed = 0;
    auto report = [&](int id, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        const Outcome o = f();
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d: %s  %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.summary.c_str(), dt);
        std::fflush(stdout);
        failed += !o.pass;
    };
    report(1, bound_arithmetic);
    report(2, [&] { return controller_comparison(planar); });
    report(3, [&] { return tracking(planar); });
    report(4, [&] { return robust_bound(planar, spatial); });
    report(5, [&] { return containment(planar, spatial); });
    report(6, [&] { return oracle_equivalence(planar); });
    report(7, [&] { return gradients(planar); });
    report(8, unit_product);
    EndToEnd e2e;
    report(9, [&] {
        e2e = run_scenes(planar);
        return end_to_end(e2e);
    });
    report(10, [&] { return timeouts(e2e, planar); });
    return failed;
}
