#include "armour/dynamics.hpp"

#include "armour/errors.hpp"

namespace armour {

RneaState modified_reference(const TotalFeedbackState& s, const Eigen::VectorXd& Kr)
{
    return {s.q, s.qd, s.qd_d + Kr.cwiseProduct(s.e()), s.qdd_d + Kr.cwiseProduct(s.ed())};
}

Eigen::VectorXd modified_error(const TotalFeedbackState& s, const Eigen::VectorXd& Kr)
{
    return s.ed() + Kr.cwiseProduct(s.e());
}

namespace {

// One recursion, three arithmetics. The operation sequence is shared so the interval and PZ
// versions enclose each other's realizations step for step.

struct RealOps {
    using V = Eigen::Vector3d;
    using R = Eigen::Matrix3d;
    using S = double;
    using Mass = double;
    using Com = Eigen::Vector3d;
    using Inertia = Eigen::Matrix3d;

    V zero() const { return V::Zero(); }
    V cst(const Eigen::Vector3d& v) const { return v; }
    V com(const Com& c) const { return c; }
    V add(const V& a, const V& b) const { return a + b; }
    V rt(const R& r, const V& v) const { return r.transpose() * v; }
    V rot(const R& r, const V& v) const { return r * v; }
    V cross(const V& a, const V& b) const { return a.cross(b); }
    V axis(const S& s, const Eigen::Vector3d& z) const { return s * z; }
    V mass(const Mass& m, const V& v) const { return m * v; }
    V inertia(const Inertia& I, const V& v) const { return I * v; }
    S dot(const Eigen::Vector3d& z, const V& v) const { return z.dot(v); }
};

struct IntervalOps {
    using V = IntervalMatrix;
    using R = Eigen::Matrix3d;
    using S = double;
    using Mass = Interval;
    using Com = IntervalMatrix;
    using Inertia = IntervalMatrix;

    V zero() const { return IntervalMatrix(3, 1); }
    V cst(const Eigen::Vector3d& v) const { return IntervalMatrix(Eigen::MatrixXd(v)); }
    V com(const Com& c) const { return c; }
    V add(const V& a, const V& b) const { return a + b; }
    V rt(const R& r, const V& v) const { return Eigen::MatrixXd(r.transpose()) * v; }
    V rot(const R& r, const V& v) const { return Eigen::MatrixXd(r) * v; }
    V cross(const V& a, const V& b) const { return iv_cross(a, b); }
    V axis(const S& s, const Eigen::Vector3d& z) const { return cst(s * z); }
    V mass(const Mass& m, const V& v) const { return m * v; }
    V inertia(const Inertia& I, const V& v) const { return iv_matmul(I, v); }
    Interval dot(const Eigen::Vector3d& z, const V& v) const
    {
        return (Eigen::MatrixXd(z.transpose()) * v)[0];
    }
};

struct PzOps {
    using V = PolyZonotope;
    using R = PolyZonotope;
    using S = PolyZonotope;
    using Mass = PolyZonotope;
    using Com = PolyZonotope;
    using Inertia = PolyZonotope;

    int budget = 100;

    V fin(const V& v) const { return pz_reduce(v, budget); }
    V zero() const { return PolyZonotope(Eigen::Vector3d::Zero()); }
    V cst(const Eigen::Vector3d& v) const { return PolyZonotope(v); }
    V com(const Com& c) const { return c; }
    V add(const V& a, const V& b) const { return fin(a + b); }
    V rt(const R& r, const V& v) const { return pz_mul(r.transpose(), v, budget); }
    V rot(const R& r, const V& v) const { return pz_mul(r, v, budget); }
    V cross(const V& a, const V& b) const { return pz_cross(a, b, budget); }
    V axis(const S& s, const Eigen::Vector3d& z) const { return pz_outer(s, Eigen::MatrixXd(z)); }
    V mass(const Mass& m, const V& v) const { return pz_mul(m, v, budget); }
    V inertia(const Inertia& I, const V& v) const { return pz_mul(I, v, budget); }
    PolyZonotope dot(const Eigen::Vector3d& z, const V& v) const
    {
        return pz_linear_map(Eigen::MatrixXd(z.transpose()), v);
    }
};

template <class Ops, class Link, class Out>
std::vector<Out> recursion(const Ops& ops, const RobotModel& model, const std::vector<typename Ops::R>& rot,
                           const std::vector<typename Ops::S>& qd, const std::vector<typename Ops::S>& qd_a,
                           const std::vector<typename Ops::S>& qdd_a, const std::vector<Link>& params,
                           const Eigen::Vector3d& a0)
{
    using V = typename Ops::V;
    const int n = model.n_q();
    if (static_cast<int>(params.size()) != n) throw DimensionError("rnea: inertial parameter count");

    std::vector<V> F, N, C;
    F.reserve(n);
    N.reserve(n);
    V w = ops.zero(), wa = ops.zero(), wd = ops.zero(), a = ops.cst(a0);
    for (int j = 0; j < n; ++j) {
        const auto& jt = model.joints[static_cast<size_t>(j)];
        const auto& R = rot[static_cast<size_t>(j)];
        const V p = ops.cst(jt.translation);
        // linear acceleration of origin j, carried from frame j-1
        const V a_parent = ops.add(ops.add(a, ops.cross(wd, p)), ops.cross(w, ops.cross(wa, p)));
        const V w_par = ops.rt(R, w);
        const V wa_par = ops.rt(R, wa);
        const V qd_z = ops.axis(qd[j], jt.axis);
        wd = ops.add(ops.add(ops.rt(R, wd), ops.cross(wa_par, qd_z)), ops.axis(qdd_a[j], jt.axis));
        w = ops.add(w_par, qd_z);
        wa = ops.add(wa_par, ops.axis(qd_a[j], jt.axis));
        a = ops.rt(R, a_parent);

        const V c = ops.com(params[j].c);
        const V ac = ops.add(ops.add(a, ops.cross(wd, c)), ops.cross(w, ops.cross(wa, c)));
        F.push_back(ops.mass(params[j].m, ac));
        N.push_back(ops.add(ops.inertia(params[j].I, wd), ops.cross(wa, ops.inertia(params[j].I, w))));
        C.push_back(c);
    }

    std::vector<Out> u(static_cast<size_t>(n));
    V f = ops.zero(), nn = ops.zero();
    for (int j = n - 1; j >= 0; --j) {
        const size_t js = static_cast<size_t>(j);
        if (j + 1 < n) {
            const auto& Rn = rot[js + 1];
            const V Rf = ops.rot(Rn, f);
            const V pn = ops.cst(model.joints[js + 1].translation);
            nn = ops.add(ops.add(ops.add(ops.rot(Rn, nn), ops.cross(C[js], F[js])), ops.cross(pn, Rf)), N[js]);
            f = ops.add(Rf, F[js]);
        } else {
            nn = ops.add(ops.cross(C[js], F[js]), N[js]);
            f = F[js];
        }
        u[js] = ops.dot(model.joints[js].axis, nn);
    }
    return u;
}

std::vector<double> as_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void check_state(const RobotModel& model, const RneaState& s)
{
    const int n = model.n_q();
    if (s.q.size() != n || s.qd.size() != n || s.qd_a.size() != n || s.qdd_a.size() != n)
        throw DimensionError("rnea: state vectors must have length n_q");
}

std::vector<Eigen::Matrix3d> point_rotations(const RobotModel& model, const Eigen::VectorXd& q)
{
    std::vector<Eigen::Matrix3d> out;
    for (int j = 0; j < model.n_q(); ++j) out.push_back(homog_transform(model, j, q[j]).R);
    return out;
}

struct IntervalLink {
    Interval m;
    IntervalMatrix c;
    IntervalMatrix I;
};

} // namespace

Eigen::VectorXd rnea(const RobotModel& model, const RneaState& s, const InertialParams& params,
                     const Eigen::Vector3d& a0)
{
    check_state(model, s);
    const auto u = recursion<RealOps, LinkInertia, double>(RealOps{}, model, point_rotations(model, s.q), as_vec(s.qd),
                                                          as_vec(s.qd_a), as_vec(s.qdd_a), params, a0);
    return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(u.size()));
}

IntervalMatrix irnea(const RobotModel& model, const RneaState& s, const IntervalInertialParams& params,
                     const Eigen::Vector3d& a0)
{
    check_state(model, s);
    const auto u = recursion<IntervalOps, IntervalLinkInertia, Interval>(
        IntervalOps{}, model, point_rotations(model, s.q), as_vec(s.qd), as_vec(s.qd_a), as_vec(s.qdd_a), params, a0);
    IntervalMatrix out(model.n_q(), 1);
    for (int j = 0; j < model.n_q(); ++j) out[j] = u[static_cast<size_t>(j)];
    return out;
}

Eigen::MatrixXd mass_matrix(const RobotModel& model, const Eigen::VectorXd& q, const InertialParams& params)
{
    const int n = model.n_q();
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        M.col(i) = rnea(model, {q, z, z, Eigen::VectorXd::Unit(n, i)}, params, Eigen::Vector3d::Zero());
    return M;
}

Eigen::VectorXd gravity_torque(const RobotModel& model, const Eigen::VectorXd& q, const InertialParams& params)
{
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(model.n_q());
    return rnea(model, {q, z, z, z}, params, model.base_accel());
}

IntervalMatrix mass_times_r(const RobotModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& r,
                            const IntervalInertialParams& params)
{
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(model.n_q());
    return irnea(model, {q, z, z, r}, params, Eigen::Vector3d::Zero());
}

PzInertialParams pz_params(const InertialParams& p)
{
    PzInertialParams out;
    for (const auto& l : p)
        out.push_back({PolyZonotope::scalar(l.m), PolyZonotope(Eigen::VectorXd(l.c)), PolyZonotope::constant(l.I)});
    return out;
}

PzInertialParams pz_params(const IntervalInertialParams& p)
{
    PzInertialParams out;
    for (const auto& l : p) {
        IntervalMatrix m(1, 1);
        m[0] = l.m;
        out.push_back({pz_box(m), pz_box(l.c), pz_box(l.I)});
    }
    return out;
}

PolyZonotope pz_joint_rotation(const Joint& joint, const PolyZonotope& cos_q, const PolyZonotope& sin_q, int reduce_to)
{
    const Eigen::Vector3d& a = joint.axis;
    const Eigen::Matrix3d A = a * a.transpose();
    const Eigen::Matrix3d B = Eigen::Matrix3d::Identity() - A;
    Eigen::Matrix3d K;
    K << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    PolyZonotope R = pz_add_constant(pz_outer(cos_q, B) + pz_outer(sin_q, K), A);
    if (!joint.fixed_rotation.isIdentity(0.0)) R = pz_linear_map(joint.fixed_rotation, R);
    return pz_reduce(R, reduce_to);
}

std::vector<PolyZonotope> pzrnea(const RobotModel& model, const PzJointState& s, const PzInertialParams& params,
                                 const Eigen::Vector3d& a0, int reduce_to)
{
    const size_t n = static_cast<size_t>(model.n_q());
    if (s.cos_q.size() != n || s.sin_q.size() != n || s.qd.size() != n || s.qd_a.size() != n || s.qdd_a.size() != n)
        throw DimensionError("pzrnea: state must have n_q entries per field");
    std::vector<PolyZonotope> rot;
    for (size_t j = 0; j < n; ++j) rot.push_back(pz_joint_rotation(model.joints[j], s.cos_q[j], s.sin_q[j], reduce_to));
    PzOps ops;
    ops.budget = reduce_to;
    return recursion<PzOps, PzLinkInertia, PolyZonotope>(ops, model, rot, s.qd, s.qd_a, s.qdd_a, params, a0);
}

} // namespace armour
