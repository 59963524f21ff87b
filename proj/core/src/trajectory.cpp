#include "armour/trajectory.hpp"

#include "armour/errors.hpp"

#include <array>
#include <cmath>

namespace armour {

InitialCondition InitialCondition::at_rest(const Eigen::VectorXd& q)
{
    return {q, Eigen::VectorXd::Zero(q.size()), Eigen::VectorXd::Zero(q.size())};
}

TrajectoryShape TrajectoryShape::centered(const InitialCondition& init, double step)
{
    return {Eigen::VectorXd::Constant(init.n_q(), step), init.q0};
}

namespace {

constexpr std::array<double, 6> binom5{1, 5, 10, 10, 5, 1};

// Power-basis coefficients of the degree-5 Bernstein basis: row l holds b_l(s) = sum_m P(l, m) s^m.
Eigen::Matrix<double, 6, 6> bernstein_to_power()
{
    Eigen::Matrix<double, 6, 6> P = Eigen::Matrix<double, 6, 6>::Zero();
    for (int l = 0; l <= 5; ++l) {
        // s^l (1 - s)^(5 - l)
        const int r = 5 - l;
        double c = 1.0;
        for (int i = 0; i <= r; ++i) {
            P(l, l + i) = binom5[l] * c * ((i % 2) ? -1.0 : 1.0);
            c = c * (r - i) / (i + 1);
        }
    }
    return P;
}

void check_init(const InitialCondition& init, const TrajectoryShape& shape)
{
    const auto n = init.q0.size();
    if (init.qd0.size() != n || init.qdd0.size() != n || shape.eta1.size() != n || shape.eta2.size() != n)
        throw DimensionError("trajectory: initial condition / shape length mismatch");
}

// beta_0..beta_2 and beta_5 = eta1 k + eta2 (beta_3 = beta_4 = beta_5).
Eigen::Matrix<double, 6, 1> pinned(double q0, double qd0, double qdd0, double beta5, double t_f)
{
    Eigen::Matrix<double, 6, 1> b;
    b[0] = q0;
    b[1] = (qd0 * t_f + 5 * b[0]) / 5;
    b[2] = (qdd0 * t_f * t_f + 40 * b[1] - 20 * b[0]) / 20;
    b[5] = beta5;
    b[4] = (0 + 5 * b[5]) / 5;
    b[3] = (0 + 40 * b[4] - 20 * b[5]) / 20;
    return b;
}

} // namespace

BernsteinTrajectory bernstein_coeffs(const InitialCondition& init, const Eigen::VectorXd& k, const TrajectoryShape& shape,
                                     double t_f)
{
    check_init(init, shape);
    if (k.size() != init.n_q()) throw DimensionError("bernstein_coeffs: k length");
    if (!(t_f > 0)) throw RangeError("bernstein_coeffs: t_f must be positive");
    Eigen::MatrixXd beta(init.n_q(), 6);
    for (int j = 0; j < init.n_q(); ++j) {
        if (!(std::abs(k[j]) <= 1.0)) throw RangeError("bernstein_coeffs: |k_j| > 1");
        beta.row(j) = pinned(init.q0[j], init.qd0[j], init.qdd0[j], shape.eta1[j] * k[j] + shape.eta2[j], t_f).transpose();
    }
    return BernsteinTrajectory(beta, t_f);
}

DesiredState BernsteinTrajectory::eval(double t) const
{
    if (!(t >= 0.0 && t <= t_f_)) throw RangeError("eval_desired: t outside [0, t_f]");
    const double s = t / t_f_;
    // Bernstein derivatives via forward differences of the coefficients
    const auto basis = [](int deg, double x, int l) {
        double c = 1.0;
        for (int i = 0; i < l; ++i) c = c * (deg - i) / (i + 1);
        return c * std::pow(x, l) * std::pow(1 - x, deg - l);
    };
    DesiredState out{Eigen::VectorXd::Zero(n_q()), Eigen::VectorXd::Zero(n_q()), Eigen::VectorXd::Zero(n_q())};
    for (int j = 0; j < n_q(); ++j) {
        const auto b = beta_.row(j);
        for (int l = 0; l <= 5; ++l) out.q[j] += b[l] * basis(5, s, l);
        for (int l = 0; l <= 4; ++l) out.qd[j] += 5 * (b[l + 1] - b[l]) * basis(4, s, l);
        for (int l = 0; l <= 3; ++l) out.qdd[j] += 20 * (b[l + 2] - 2 * b[l + 1] + b[l]) * basis(3, s, l);
    }
    out.qd /= t_f_;
    out.qdd /= t_f_ * t_f_;
    return out;
}

PowerForm power_form(const InitialCondition& init, const TrajectoryShape& shape, double t_f)
{
    check_init(init, shape);
    static const Eigen::Matrix<double, 6, 6> P = bernstein_to_power();
    PowerForm out{Eigen::MatrixXd(init.n_q(), 6), Eigen::MatrixXd(init.n_q(), 6)};
    for (int j = 0; j < init.n_q(); ++j) {
        const auto b0 = pinned(init.q0[j], init.qd0[j], init.qdd0[j], shape.eta2[j], t_f);
        const auto b1 = pinned(0, 0, 0, shape.eta1[j], t_f);
        out.a.row(j) = (P.transpose() * b0).transpose();
        out.b.row(j) = (P.transpose() * b1).transpose();
    }
    return out;
}

TimeGrid time_partition(double t_f, int n_t)
{
    if (n_t < 1) throw RangeError("time_partition: n_t must be >= 1");
    if (!(t_f > 0)) throw RangeError("time_partition: t_f must be positive");
    TimeGrid g;
    g.t_f = t_f;
    g.n_t = n_t;
    g.dt = t_f / n_t;
    for (int i = 0; i < n_t; ++i)
        g.steps.push_back(
            PolyZonotope::variable(IndeterminateId::time(static_cast<std::uint32_t>(i)), (i + 0.5) * g.dt, g.dt / 2));
    return g;
}

DesiredPz desired_traj_pz(const InitialCondition& init, const TrajectoryShape& shape, const TimeGrid& grid, int i)
{
    if (i < 0 || i >= grid.n_t) throw RangeError("desired_traj_pz: step index");
    const PowerForm pf = power_form(init, shape, grid.t_f);
    const double tf = grid.t_f;
    const PolyZonotope s = pz_scale(1.0 / tf, grid.steps[static_cast<size_t>(i)]);
    std::vector<PolyZonotope> pw{PolyZonotope::scalar(1.0), s};
    for (int m = 2; m <= 5; ++m) pw.push_back(pz_mul(pw.back(), s));

    // sum_m c[m] s^(m - order) * falling(m, order)
    const auto poly = [&](const Eigen::RowVectorXd& c, int order) {
        PolyZonotope acc = PolyZonotope::scalar(0.0);
        for (int m = order; m <= 5; ++m) {
            double f = 1.0;
            for (int r = 0; r < order; ++r) f *= (m - r);
            if (c[m] * f != 0.0) acc = acc + pz_scale(c[m] * f, pw[static_cast<size_t>(m - order)]);
        }
        return acc;
    };

    DesiredPz out;
    for (int j = 0; j < init.n_q(); ++j) {
        const PolyZonotope k = PolyZonotope::variable(IndeterminateId::param(static_cast<std::uint32_t>(j)));
        const double scale[3] = {1.0, 1.0 / tf, 1.0 / (tf * tf)};
        std::vector<PolyZonotope>* dst[3] = {&out.q, &out.qd, &out.qdd};
        for (int order = 0; order < 3; ++order) {
            const PolyZonotope fixed = poly(pf.a.row(j), order);
            const PolyZonotope with_k = pz_mul(k, poly(pf.b.row(j), order));
            dst[order]->push_back(pz_scale(scale[order], fixed + with_k));
        }
    }
    return out;
}

BufferedPz buffer_error_pz(const DesiredPz& d, const Eigen::VectorXd& eps_p, double eps_v, const Eigen::VectorXd& Kr)
{
    const size_t n = d.q.size();
    if (static_cast<size_t>(eps_p.size()) != n || static_cast<size_t>(Kr.size()) != n)
        throw DimensionError("buffer_error_pz: length mismatch");
    if (eps_v < 0 || (eps_p.array() < 0).any()) throw RangeError("buffer_error_pz: negative error bound");
    BufferedPz out;
    for (size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<std::uint32_t>(j);
        const PolyZonotope xp = PolyZonotope::variable(IndeterminateId::err_pos(jj));
        const PolyZonotope xv = PolyZonotope::variable(IndeterminateId::err_vel(jj));
        const double ep = eps_p[static_cast<Eigen::Index>(j)], kr = Kr[static_cast<Eigen::Index>(j)];
        out.q.push_back(ep > 0 ? d.q[j] - pz_scale(ep, xp) : d.q[j]);
        out.qd.push_back(eps_v > 0 ? d.qd[j] - pz_scale(eps_v, xv) : d.qd[j]);
        out.qd_a.push_back(ep > 0 ? d.qd[j] + pz_scale(kr * ep, xp) : d.qd[j]);
        out.qdd_a.push_back(eps_v > 0 ? d.qdd[j] + pz_scale(kr * eps_v, xv) : d.qdd[j]);
    }
    return out;
}

} // namespace armour
