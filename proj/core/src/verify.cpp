#include "armour/verify.hpp"

#include "armour/constraints.hpp"
#include "armour/controller.hpp"
#include "armour/dynamics.hpp"
#include "armour/harness.hpp"
#include "armour/reachsets.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace armour {

namespace {

const double pi = std::numbers::pi;

struct Rng {
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
    Eigen::VectorXd vector(int n, double lo = -1.0, double hi = 1.0)
    {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }
    Interval interval(double lo = -2.0, double hi = 2.0)
    {
        const double a = uniform(lo, hi), b = uniform(lo, hi);
        return {std::min(a, b), std::max(a, b)};
    }
    std::mt19937_64 gen;
};

// Accumulates excess = value - allowed per sample.
class Tally {
public:
    Tally(std::string name, double tol) : tol_(tol), t0_(std::chrono::steady_clock::now()) { r_.name = std::move(name); }

    void sample() { ++r_.samples; }
    // one check inside the current sample; value must be <= allowed
    void le(double value, double allowed, const std::string& what = "")
    {
        const double excess = value - allowed;
        r_.worst = std::max(r_.worst, excess);
        if (!(excess <= tol_)) {
            if (!bad_) ++r_.violations;
            bad_ = true;
            if (r_.detail.empty()) {
                std::ostringstream os;
                os << what << " exceeds by " << excess;
                r_.detail = os.str();
            }
        }
    }
    void in(double v, double lo, double hi, const std::string& what = "")
    {
        le(v, hi, what);
        le(lo, v, what);
    }
    void end_sample() { bad_ = false; }
    SuiteResult done()
    {
        r_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        return r_;
    }

private:
    SuiteResult r_;
    double tol_;
    bool bad_ = false;
    std::chrono::steady_clock::time_point t0_;
};

PolyZonotope random_pz(Rng& rng, int rows, int cols, const std::vector<IndeterminateId>& ids, int n_gen,
                       double box)
{
    const int dim = rows * cols;
    Eigen::MatrixXi E(int(ids.size()), n_gen);
    for (int g = 0; g < n_gen; ++g)
        for (int i = 0; i < E.rows(); ++i) E(i, g) = rng.integer(0, 2);
    Eigen::MatrixXd G(dim, n_gen);
    for (int i = 0; i < G.size(); ++i) G.data()[i] = rng.uniform();
    return PolyZonotope(rows, cols, rng.vector(dim), G, E, ids, rng.vector(dim, 0.0, box));
}

Eigen::VectorXd sample_point(Rng& rng, const PolyZonotope& p, const std::map<IndeterminateId, double>& x)
{
    Eigen::VectorXd v = p.evaluate(x);
    for (int d = 0; d < p.dim(); ++d) v[d] += p.box()[d] * rng.uniform();
    return v;
}

// Row-major flattening matches the PZ layout.
Eigen::VectorXd flat(const Eigen::MatrixXd& m)
{
    Eigen::VectorXd v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
    return v;
}

Eigen::MatrixXd unflat(const Eigen::VectorXd& v, int rows, int cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
    return m;
}

void in_bounds(Tally& t, const PzBounds& b, const Eigen::VectorXd& v, const std::string& what)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) t.in(v[i], b.inf[i], b.sup[i], what);
}

} // namespace

SuiteResult check_interval_ops(const VerifyOptions& o)
{
    Rng rng(o.seed);
    Tally t("interval ops", o.tol);
    for (int s = 0; s < o.samples; ++s) {
        t.sample();
        const Interval a = rng.interval(), b = rng.interval();
        const double x = rng.uniform(a.lo(), a.hi()), y = rng.uniform(b.lo(), b.hi());
        auto chk = [&](const Interval& z, double v, const char* what) { t.in(v, z.lo(), z.hi(), what); };
        chk(a + b, x + y, "sum");
        chk(a - b, x - y, "difference");
        chk(a * b, x * y, "product");
        chk(iv_sin(a), std::sin(x), "sin");
        chk(iv_cos(a), std::cos(x), "cos");
        chk(hull(a, b), x, "hull");

        IntervalMatrix A(3, 3), B(3, 1), C(3, 1);
        for (int i = 0; i < 9; ++i) A[i] = rng.interval();
        for (int i = 0; i < 3; ++i) B[i] = rng.interval(), C[i] = rng.interval();
        Eigen::Matrix3d pa;
        Eigen::Vector3d pb, pc;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) pa(i, j) = rng.uniform(A(i, j).lo(), A(i, j).hi());
        for (int i = 0; i < 3; ++i) pb[i] = rng.uniform(B[i].lo(), B[i].hi()), pc[i] = rng.uniform(C[i].lo(), C[i].hi());
        const auto AB = iv_matmul(A, B), BxC = iv_cross(B, C);
        const Eigen::Vector3d ab = pa * pb, bxc = pb.cross(pc);
        for (int i = 0; i < 3; ++i) {
            chk(AB[i], ab[i], "matrix product");
            chk(BxC[i], bxc[i], "cross product");
        }
        t.end_sample();
    }
    return t.done();
}

SuiteResult check_pz_ops(const VerifyOptions& o)
{
    Rng rng(o.seed);
    Tally t("pz ops", o.tol);
    const std::vector<IndeterminateId> ids = fresh_ids(3);
    PolyZonotope a, b, M, sum, prod, mapped, reduced, sliced;
    Eigen::Matrix3d L;
    double fixed = 0;
    for (int s = 0; s < o.samples; ++s) {
        if (s % 200 == 0) {
            a = random_pz(rng, 3, 1, ids, 5, 0.1);
            b = random_pz(rng, 3, 1, ids, 4, 0.1);
            M = random_pz(rng, 3, 3, ids, 3, 0.05);
            for (int i = 0; i < 9; ++i) L.data()[i] = rng.uniform();
            fixed = rng.uniform();
            sum = pz_sum(a, b);
            prod = pz_mul(M, a, 20);
            mapped = pz_linear_map(L, a);
            reduced = pz_reduce(a, 2);
            sliced = pz_slice(a, {{ids[0], fixed}});
        }
        t.sample();
        auto x = std::map<IndeterminateId, double>{};
        for (const auto& id : ids) x[id] = rng.uniform();
        const Eigen::VectorXd pa = sample_point(rng, a, x), pb = sample_point(rng, b, x);
        const Eigen::MatrixXd pm = unflat(sample_point(rng, M, x), 3, 3);
        in_bounds(t, pz_bounds(sum), pa + pb, "sum");
        in_bounds(t, pz_bounds(prod), pm * pa, "product");
        in_bounds(t, pz_bounds(mapped), L * pa, "linear map");
        in_bounds(t, pz_bounds(reduced), pa, "reduce");
        x[ids[0]] = fixed;
        in_bounds(t, pz_bounds(sliced), sample_point(rng, a, x), "slice");
        t.end_sample();
    }
    return t.done();
}

SuiteResult check_taylor(const VerifyOptions& o)
{
    Rng rng(o.seed);
    Tally t("taylor sin/cos", o.tol);
    const IndeterminateId id = fresh_id();
    PolyZonotope ps, pc;
    double c = 0, w = 0;
    for (int s = 0; s < o.samples; ++s) {
        if (s % 100 == 0) {
            c = rng.uniform(-pi, pi);
            w = rng.uniform(0.0, 0.5);
            const auto Q = PolyZonotope::variable(id, c, w);
            ps = pz_taylor(AnalyticFunction::sin(), Q);
            pc = pz_taylor(AnalyticFunction::cos(), Q);
        }
        t.sample();
        const double x = rng.uniform();
        const std::map<IndeterminateId, double> xs{{id, x}};
        // pointwise: the dependent value plus the box covers the function
        t.le(std::abs(std::sin(c + w * x) - ps.evaluate(xs)[0]), ps.box().size() ? ps.box()[0] : 0.0, "sin");
        t.le(std::abs(std::cos(c + w * x) - pc.evaluate(xs)[0]), pc.box().size() ? pc.box()[0] : 0.0, "cos");
        t.end_sample();
    }
    return t.done();
}

SuiteResult check_irnea(const LoadedRobot& robot, const VerifyOptions& o)
{
    Rng rng(o.seed);
    Tally t("irnea", o.tol);
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    for (int s = 0; s < o.samples; ++s) {
        t.sample();
        const RneaState st{rng.vector(n, -pi, pi), rng.vector(n, -2, 2), rng.vector(n, -2, 2), rng.vector(n, -5, 5)};
        const auto iv = irnea(m, st, robot.interval, m.base_accel());
        const Eigen::VectorXd tau = rnea(m, st, sample_params(robot.interval, rng.gen(), s % 2), m.base_accel());
        for (int j = 0; j < n; ++j) t.in(tau[j], iv[j].lo(), iv[j].hi(), "joint torque");
        t.end_sample();
    }
    return t.done();
}

SuiteResult check_pzrnea(const LoadedRobot& robot, const VerifyOptions& o)
{
    Rng rng(o.seed);
    Tally t("pzrnea", o.tol);
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    const double wq = 0.08, wv = 0.1;
    std::vector<PolyZonotope> u;
    Eigen::VectorXd qc, qdc, qdac, qddac;
    for (int s = 0; s < o.samples; ++s) {
        if (s % 1000 == 0) {
            qc = rng.vector(n, -pi, pi);
            qdc = rng.vector(n, -1.5, 1.5);
            qdac = rng.vector(n, -1.5, 1.5);
            qddac = rng.vector(n, -2, 2);
            PzJointState js;
            for (int j = 0; j < n; ++j) {
                const auto xq = IndeterminateId::err_pos(j), xv = IndeterminateId::err_vel(j);
                const auto Q = PolyZonotope::variable(xq, qc[j], wq);
                js.cos_q.push_back(pz_taylor(AnalyticFunction::cos(), Q));
                js.sin_q.push_back(pz_taylor(AnalyticFunction::sin(), Q));
                js.qd.push_back(PolyZonotope::variable(xv, qdc[j], wv));
                js.qd_a.push_back(PolyZonotope::variable(xq, qdac[j], wv));
                js.qdd_a.push_back(PolyZonotope::variable(xv, qddac[j], wv));
            }
            u = pzrnea(m, js, pz_params(robot.interval), m.base_accel(), 60);
        }
        t.sample();
        std::map<IndeterminateId, double> x;
        RneaState st{qc, qdc, qdac, qddac};
        for (int j = 0; j < n; ++j) {
            const double a = rng.uniform(), b = rng.uniform();
            x[IndeterminateId::err_pos(j)] = a;
            x[IndeterminateId::err_vel(j)] = b;
            st.q[j] += wq * a;
            st.qd[j] += wv * b;
            st.qd_a[j] += wv * a;
            st.qdd_a[j] += wv * b;
        }
        const Eigen::VectorXd tau = rnea(m, st, sample_params(robot.interval, rng.gen(), s % 2), m.base_accel());
        for (int j = 0; j < n; ++j) t.le(std::abs(tau[j] - u[j].evaluate(x)[0]), u[j].box()[0], "joint torque");
        t.end_sample();
    }
    return t.done();
}

std::vector<SuiteResult> check_reach_sets(const LoadedRobot& robot, const VerifyOptions& o)
{
    Rng rng(o.seed);
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    const ControllerConfig cfg = make_controller_config(robot);
    const UniformBounds ub = uniform_bounds(cfg);
    const ReachProblem prob{&m, &robot.nominal, &robot.interval, cfg, {}};
    Tally fk("pzfk", o.tol), fo("pzfo", o.tol), input("input reach set", o.tol);

    const int n_inits = 4;
    for (int c = 0; c < n_inits; ++c) {
        const InitialCondition init{rng.vector(n, -1.5, 1.5), rng.vector(n, -0.5, 0.5), rng.vector(n, -1, 1)};
        const TrajectoryShape shape = TrajectoryShape::centered(init, pi / 24);
        const TimeGrid grid = time_partition(1.0, 40);
        const auto bundles = build_bundles(prob, init, shape, grid, 1);
        const int per = o.samples / n_inits + (c < o.samples % n_inits);
        for (int s = 0; s < per; ++s) {
            // tracking state with |e_j| <= eps_p_j and |r| <= eps
            const int step = rng.integer(0, grid.n_t - 1);
            const double tm = rng.uniform(grid.lo(step), grid.hi(step));
            const Eigen::VectorXd k = rng.vector(n);
            const auto d = bernstein_coeffs(init, k, shape, grid.t_f).eval(tm);
            Eigen::VectorXd r;
            do r = rng.vector(n);
            while (r.norm() > 1);
            r *= ub.eps;
            const Eigen::VectorXd e = rng.vector(n).cwiseProduct(ub.eps_p);
            const TotalFeedbackState st{d.q - e, d.qd - (r - cfg.Kr.cwiseProduct(e)), d.q, d.qd, d.qdd};
            const auto& b = bundles[step];

            const auto frames = fk_point(m, st.q);
            fk.sample();
            fo.sample();
            for (int j = 0; j < n; ++j) {
                in_bounds(fk, pz_bounds(pz_slice_k(b.frames[j].p, k)), frames[j].p, "frame origin");
                in_bounds(fk, pz_bounds(pz_slice_k(b.frames[j].R, k)), flat(frames[j].R), "frame rotation");
                const Zonotope3& L = m.links[j];
                const auto bo = pz_bounds(pz_slice_k(b.fo[j], k));
                for (int p = 0; p < 4; ++p) {
                    const Eigen::Vector3d pt = frames[j].p + frames[j].R * (L.center + L.generators * rng.vector(L.n_generators()));
                    in_bounds(fo, bo, pt, "link point");
                }
            }
            fk.end_sample();
            fo.end_sample();

            input.sample();
            const auto ri = robust_input(m, st, robot.nominal, robot.interval, cfg);
            for (int j = 0; j < n; ++j) {
                input.le(std::abs(ri.v[j]), b.input.robust_bound[j], "robust input");
                const auto bu = pz_bounds(pz_slice_k(b.input.input[j], k));
                input.in(ri.u[j], bu.inf[0], bu.sup[0], "control input");
            }
            input.end_sample();
        }
    }
    return {fk.done(), fo.done(), input.done()};
}

SuiteResult check_tracking(const LoadedRobot& robot, int n_trajectories, std::uint64_t seed, double dt)
{
    Rng rng(seed);
    Tally t("tracking bounds", 0.0);
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    const ControllerConfig cfg = make_controller_config(robot);
    const UniformBounds ub = uniform_bounds(cfg);
    SimOptions so;
    so.dt = dt;
    for (int i = 0; i < n_trajectories; ++i) {
        const InitialCondition init{rng.vector(n, -2, 2), rng.vector(n, -0.5, 0.5), rng.vector(n, -1, 1)};
        const auto traj = bernstein_coeffs(init, rng.vector(n), TrajectoryShape::centered(init, pi / 6));
        const auto truth = sample_params(robot.interval, seed * 1000 + i, true);
        const auto log = simulate_closed_loop(m, truth, traj, robot.nominal, robot.interval, cfg, so);
        for (const auto& s : log.samples) {
            t.sample();
            t.le(s.r_norm, ub.eps, "|r|");
            for (int j = 0; j < n; ++j) {
                t.le(std::abs(s.q_d[j] - s.q[j]), ub.eps_p[j], "|e|");
                t.le(std::abs(s.qd_d[j] - s.qd[j]), ub.eps_v, "|ed|");
            }
            t.end_sample();
        }
    }
    return t.done();
}

SuiteResult check_robust_bound(const LoadedRobot& robot, const VerifyOptions& o)
{
    Rng rng(o.seed);
    Tally t("robust input bound", o.tol);
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    const ControllerConfig cfg = make_controller_config(robot);
    const UniformBounds ub = uniform_bounds(cfg);
    for (int s = 0; s < o.samples; ++s) {
        TotalFeedbackState st;
        st.q_d = rng.vector(n, -pi, pi);
        st.qd_d = rng.vector(n, -2, 2);
        st.qdd_d = rng.vector(n, -5, 5);
        Eigen::VectorXd r;
        do r = rng.vector(n);
        while (r.norm() > 1);
        r *= ub.eps;
        const Eigen::VectorXd e = rng.vector(n).cwiseProduct(ub.eps_p);
        st.q = st.q_d - e;
        st.qd = st.qd_d - (r - cfg.Kr.cwiseProduct(e));
        t.sample();
        const auto ri = robust_input(m, st, robot.nominal, robot.interval, cfg);
        const Eigen::VectorXd bound = robust_input_bound(cfg, ri.w_M);
        for (int j = 0; j < n; ++j) t.le(std::abs(ri.v[j]), bound[j], "|v|");
        t.end_sample();
    }
    return t.done();
}

SuiteResult check_gradients(const LoadedRobot& robot, int n_pairs, std::uint64_t seed, double rel_tol)
{
    Rng rng(seed);
    Tally t("constraint gradients", 0.0);
    const RobotModel& m = robot.model;
    const int n = m.n_q();
    const ControllerConfig cfg = make_controller_config(robot);
    const ReachProblem prob{&m, &robot.nominal, &robot.interval, cfg, {40, 6}};
    const int per_scene = 5;
    const double h = 1e-6;
    long ties = 0, checked = 0, obstacle = 0;
    for (int pair = 0; pair < n_pairs;) {
        SceneGenOptions go;
        go.n_obstacles = 6;
        go.clearance = 0.0;
        go.clear_path = false;
        const Scene sc = gen_scene(robot, go, seed * 100 + pair);
        const InitialCondition init{sc.q_start, rng.vector(n, -1, 1), rng.vector(n, -1, 1)};
        const TrajectoryShape shape = TrajectoryShape::centered(init, pi / 24);
        const TimeGrid grid = time_partition(1.0, 20);
        const auto bundles = build_bundles(prob, init, shape, grid, 1);
        ConstraintOptions co;
        co.prune = false;
        const ConstraintSet cs(m, bundles, sc.obstacles, co);
        for (int s = 0; s < per_scene && pair < n_pairs; ++s, ++pair) {
            const Eigen::VectorXd k = rng.vector(n, -0.95, 0.95);
            t.sample();
            Eigen::VectorXd g;
            for (int c = 0; c < cs.size(); ++c) {
                const double f0 = cs.value(c, k, &g);
                for (int d = 0; d < n; ++d) {
                    Eigen::VectorXd kp = k, km = k;
                    kp[d] += h;
                    km[d] -= h;
                    const double fp = cs.value(c, kp), fm = cs.value(c, km);
                    const double right = (fp - f0) / h, left = (f0 - fm) / h;
                    // a kink inside the stencil: the one-sided slopes disagree
                    if (std::abs(right - left) > 1e-4 * std::max(1.0, std::abs(right))) {
                        ++ties;
                        continue;
                    }
                    const double fd = (fp - fm) / (2 * h);
                    t.le(std::abs(g[d] - fd), rel_tol * std::max(1.0, std::abs(fd)), "gradient");
                    ++checked;
                    obstacle += cs.info(c).kind == ConstraintKind::obstacle;
                }
            }
            t.end_sample();
        }
    }
    auto r = t.done();
    std::ostringstream os;
    os << checked << " partials compared (" << obstacle << " obstacle), " << ties << " skipped at kinks";
    if (!r.detail.empty()) os << "; " << r.detail;
    r.detail = os.str();
    return r;
}

SuiteResult check_unit_product(int n_pairs, int n_samples, std::uint64_t seed, double tol)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    Tally t("unit product", 0.0);
    for (int i = 0; i < n_pairs; ++i) {
        const Eigen::Vector3d a = Eigen::Vector3d(n01(gen), n01(gen), n01(gen)).normalized();
        const Eigen::Vector3d b = Eigen::Vector3d(n01(gen), n01(gen), n01(gen)).normalized();
        const double est = sampled_max_product(a, b, n_samples, gen());
        t.sample();
        t.le(std::abs(est - (1 + a.dot(b)) / 2), tol, "max product");
        t.end_sample();
    }
    return t.done();
}

std::vector<SuiteResult> verify_all(const LoadedRobot& robot, const VerifyOptions& o)
{
    std::vector<SuiteResult> out{check_interval_ops(o), check_pz_ops(o), check_taylor(o), check_irnea(robot, o),
                                 check_pzrnea(robot, o)};
    for (auto& r : check_reach_sets(robot, o)) out.push_back(std::move(r));
    out.push_back(check_robust_bound(robot, o));
    out.push_back(check_tracking(robot, 20, o.seed));
    out.push_back(check_gradients(robot, 100, o.seed));
    out.push_back(check_unit_product(50, 100000, o.seed));
    return out;
}

} // namespace armour
