#include "armour/controller.hpp"

#include "armour/errors.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace armour {

void ControllerConfig::validate() const
{
    if (Kr.size() == 0 || (Kr.array() <= 0).any()) throw RangeError("controller: Kr entries must be positive");
    if (!(V_M > 0)) throw RangeError("controller: V_M must be positive");
    if (!(alpha_c > 0)) throw RangeError("controller: alpha_c must be positive");
    if (!(sigma_m > 0 && sigma_m <= sigma_M)) throw RangeError("controller: need 0 < sigma_m <= sigma_M");
}

UniformBounds uniform_bounds(const ControllerConfig& cfg)
{
    cfg.validate();
    UniformBounds b;
    b.eps = std::sqrt(2 * cfg.V_M / cfg.sigma_m);
    b.eps_p = b.eps * cfg.Kr.cwiseInverse();
    b.eps_v = 2 * b.eps;
    b.eps_v_alt = 2 * b.eps_p;
    return b;
}

ControllerConfig make_controller_config(const LoadedRobot& robot, int eigen_samples)
{
    const auto& spec = robot.controller;
    ControllerConfig cfg;
    cfg.Kr = spec.Kr.size() ? spec.Kr : Eigen::VectorXd::Constant(robot.model.n_q(), 5.0);
    cfg.V_M = spec.V_M;
    cfg.alpha_c = spec.alpha_c;
    if (spec.sigma_m > 0 && spec.sigma_M >= spec.sigma_m) {
        cfg.sigma_m = spec.sigma_m;
        cfg.sigma_M = spec.sigma_M;
    } else {
        const EigenBounds eb = eigen_bounds(robot.model, robot.interval, eigen_samples);
        cfg.sigma_m = eb.sigma_m;
        cfg.sigma_M = eb.sigma_M;
    }
    cfg.validate();
    return cfg;
}

Eigen::VectorXd nominal_input(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                              const ControllerConfig& cfg)
{
    return rnea(model, modified_reference(s, cfg.Kr), nominal, model.base_accel());
}

Disturbance disturbance_bound(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                              const IntervalInertialParams& params, const ControllerConfig& cfg)
{
    const RneaState qa = modified_reference(s, cfg.Kr);
    const Eigen::VectorXd tau = rnea(model, qa, nominal, model.base_accel());
    Disturbance d{irnea(model, qa, params, model.base_accel()), Eigen::VectorXd(model.n_q())};
    for (int j = 0; j < model.n_q(); ++j) {
        d.w[j] = d.w[j] - Interval(tau[j]);
        d.w_M[j] = d.w[j].mag();
    }
    return d;
}

double h_lower(const RobotModel& model, const TotalFeedbackState& s, const IntervalInertialParams& params,
               const ControllerConfig& cfg)
{
    const Eigen::VectorXd r = modified_error(s, cfg.Kr);
    const IntervalMatrix Mr = mass_times_r(model, s.q, r, params);
    Interval V(0.0);
    for (int j = 0; j < model.n_q(); ++j) V += Interval(0.5 * r[j]) * Mr[j];
    return -V.hi() + cfg.V_M;
}

RobustInput robust_input(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                         const IntervalInertialParams& params, const ControllerConfig& cfg)
{
    RobustInput out;
    const Disturbance d = disturbance_bound(model, s, nominal, params, cfg);
    out.tau = nominal_input(model, s, nominal, cfg);
    out.w_M = d.w_M;
    out.r = modified_error(s, cfg.Kr);
    out.h = h_lower(model, s, params, cfg);
    const double nr = out.r.norm();
    out.v = Eigen::VectorXd::Zero(model.n_q());
    if (nr > kZeroR) {
        out.gamma = std::max(0.0, (-cfg.alpha_c * out.h + out.r.cwiseAbs().dot(out.w_M)) / nr);
        out.v = -out.gamma * out.r / nr;
    }
    out.u = out.tau - out.v;
    return out;
}

double robust_input_constant(const ControllerConfig& cfg)
{
    const double eps = std::sqrt(2 * cfg.V_M / cfg.sigma_m);
    return cfg.alpha_c * eps * (cfg.sigma_M - cfg.sigma_m) / 2;
}

Eigen::VectorXd robust_input_bound(const ControllerConfig& cfg, const Eigen::VectorXd& w_M)
{
    return (robust_input_constant(cfg) + (w_M.norm() + w_M.array()) / 2).matrix();
}

RobustInput baseline_robust_input(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                                  const IntervalInertialParams& params, const ControllerConfig& cfg, double kappa,
                                  double phi)
{
    RobustInput out;
    const Disturbance d = disturbance_bound(model, s, nominal, params, cfg);
    out.tau = nominal_input(model, s, nominal, cfg);
    out.w_M = d.w_M;
    out.r = modified_error(s, cfg.Kr);
    out.v = -(kappa * d.w_M.norm() + phi) * out.r;
    out.u = out.tau - out.v;
    return out;
}

double baseline_kappa(const ControllerConfig& cfg) { return std::sqrt(cfg.sigma_M / (2 * cfg.V_M)); }

double baseline_ratio(double sigma_M, double sigma_m) { return std::sqrt(sigma_M / sigma_m); }

double bound_crossover(const ControllerConfig& cfg)
{
    return robust_input_constant(cfg) / (baseline_ratio(cfg.sigma_M, cfg.sigma_m) - 1.0);
}

double sampled_max_product(const Eigen::Vector3d& a, const Eigen::Vector3d& b, int n_samples, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    double best = -1e300;
    for (int i = 0; i < n_samples; ++i) {
        Eigen::Vector3d c(n01(gen), n01(gen), n01(gen));
        c.normalize();
        best = std::max(best, a.dot(c) * b.dot(c));
    }
    return best;
}

Eigen::VectorXd forward_dynamics(const RobotModel& model, const InertialParams& truth, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& u)
{
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(model.n_q());
    const Eigen::VectorXd bias = rnea(model, {q, qd, qd, z}, truth, model.base_accel());
    const Eigen::LLT<Eigen::MatrixXd> llt(mass_matrix(model, q, truth));
    if (llt.info() != Eigen::Success) throw SingularityError("forward_dynamics: mass matrix not positive definite");
    return llt.solve(u - bias);
}

namespace {

struct Control {
    Eigen::VectorXd u, v, r;
    double h = 0.0;
};

Control control(const RobotModel& model, const TotalFeedbackState& s, const InertialParams& nominal,
                const IntervalInertialParams& params, const ControllerConfig& cfg, const SimOptions& o)
{
    switch (o.law) {
    case ControlLaw::armour: {
        const auto ri = robust_input(model, s, nominal, params, cfg);
        return {ri.u, ri.v, ri.r, ri.h};
    }
    case ControlLaw::baseline: {
        const auto ri = baseline_robust_input(model, s, nominal, params, cfg, o.kappa, o.phi);
        return {ri.u, ri.v, ri.r, 0.0};
    }
    case ControlLaw::nominal_only:
        break;
    }
    const Eigen::VectorXd tau = nominal_input(model, s, nominal, cfg);
    return {tau, Eigen::VectorXd::Zero(model.n_q()), modified_error(s, cfg.Kr), 0.0};
}

} // namespace

SimLog simulate_closed_loop(const RobotModel& model, const InertialParams& truth, const BernsteinTrajectory& traj,
                            const InertialParams& nominal, const IntervalInertialParams& params,
                            const ControllerConfig& cfg, const SimOptions& opts, const PlantState& start)
{
    cfg.validate();
    const double t_end = opts.t_end < 0 ? traj.t_f() : std::min(opts.t_end, traj.t_f());
    if (opts.t_start < 0 || opts.t_start > t_end) throw RangeError("simulate_closed_loop: bad start time");
    const int steps = static_cast<int>(std::llround((t_end - opts.t_start) / opts.dt));

    const DesiredState d0 = traj.eval(opts.t_start);
    Eigen::VectorXd q = start.q.size() ? start.q : d0.q;
    Eigen::VectorXd qd = start.qd.size() ? start.qd : d0.qd;
    if (opts.e0.size()) q -= opts.e0;
    if (opts.ed0.size()) qd -= opts.ed0;

    auto state_at = [&](double t, const Eigen::VectorXd& qq, const Eigen::VectorXd& qqd) {
        const DesiredState d = traj.eval(std::min(t, traj.t_f()));
        return TotalFeedbackState{qq, qqd, d.q, d.qd, d.qdd};
    };
    auto deriv = [&](double t, const Eigen::VectorXd& qq, const Eigen::VectorXd& qqd) {
        const Control c = control(model, state_at(t, qq, qqd), nominal, params, cfg, opts);
        return forward_dynamics(model, truth, qq, qqd, c.u);
    };

    SimLog log;
    log.samples.reserve(static_cast<size_t>(steps) + 1);
    auto record = [&](double t) {
        const TotalFeedbackState s = state_at(t, q, qd);
        const Control c = control(model, s, nominal, params, cfg, opts);
        SimSample smp;
        smp.t = t;
        smp.q = q;
        smp.qd = qd;
        smp.q_d = s.q_d;
        smp.qd_d = s.qd_d;
        smp.qdd_d = s.qdd_d;
        smp.u = c.u;
        smp.v = c.v;
        smp.r = c.r;
        smp.r_norm = c.r.norm();
        smp.h = c.h;
        smp.h_true = cfg.V_M - 0.5 * c.r.dot(mass_matrix(model, q, truth) * c.r);
        log.samples.push_back(std::move(smp));
    };

    record(opts.t_start);
    for (int i = 0; i < steps; ++i) {
        const double t = opts.t_start + i * opts.dt, h = opts.dt;
        const Eigen::VectorXd k1q = qd, k1v = deriv(t, q, qd);
        const Eigen::VectorXd k2q = qd + 0.5 * h * k1v, k2v = deriv(t + 0.5 * h, q + 0.5 * h * k1q, k2q);
        const Eigen::VectorXd k3q = qd + 0.5 * h * k2v, k3v = deriv(t + 0.5 * h, q + 0.5 * h * k2q, k3q);
        const Eigen::VectorXd k4q = qd + h * k3v, k4v = deriv(t + h, q + h * k3q, k4q);
        q += h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q);
        qd += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        if (!q.allFinite() || !qd.allFinite()) throw SingularityError("simulate_closed_loop: state diverged");
        record(opts.t_start + (i + 1) * opts.dt);
    }
    return log;
}

void SimLog::write_csv(const std::string& path) const
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write");
    if (samples.empty()) return;
    const int n = static_cast<int>(samples.front().q.size());
    out << "t";
    for (const char* f : {"q", "qd", "q_d", "e", "u", "v"})
        for (int j = 0; j < n; ++j) out << "," << f << j;
    out << ",r_norm\n";
    out.precision(10);
    for (const auto& s : samples) {
        out << s.t;
        for (int j = 0; j < n; ++j) out << "," << s.q[j];
        for (int j = 0; j < n; ++j) out << "," << s.qd[j];
        for (int j = 0; j < n; ++j) out << "," << s.q_d[j];
        for (int j = 0; j < n; ++j) out << "," << s.q_d[j] - s.q[j];
        for (int j = 0; j < n; ++j) out << "," << s.u[j];
        for (int j = 0; j < n; ++j) out << "," << s.v[j];
        out << "," << s.r_norm << "\n";
    }
}

} // namespace armour
