#include "armour/robot.hpp"

#include "armour/dynamics.hpp"
#include "armour/errors.hpp"

#include "json.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace armour {

using nlohmann::json;

Eigen::Vector3d Zonotope3::radius() const
{
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (int g = 0; g < n_generators(); ++g) r += generators.col(g).cwiseAbs();
    return r;
}

void RobotModel::validate() const
{
    if (joints.empty()) throw ModelError("joints: at least one joint required");
    if (links.size() != joints.size()) throw ModelError("links: expected one volume per joint");
    for (size_t j = 0; j < joints.size(); ++j) {
        const auto& jt = joints[j];
        const std::string at = "joints[" + std::to_string(j) + "]";
        if (std::abs(jt.axis.norm() - 1.0) > 1e-12) throw ModelError(at + ".axis: not unit norm");
        const Eigen::Matrix3d RtR = jt.fixed_rotation.transpose() * jt.fixed_rotation;
        if ((RtR - Eigen::Matrix3d::Identity()).norm() > 1e-9 || jt.fixed_rotation.determinant() < 0)
            throw ModelError(at + ".rpy: not a rotation");
        for (auto [name, lim] : {std::pair{"q_lim", jt.q_lim}, {"qd_lim", jt.qd_lim}, {"u_lim", jt.u_lim}})
            if (!(lim.lo <= lim.hi)) throw ModelError(at + "." + name + ": empty interval");
    }
}

namespace {

Eigen::Vector3d vec3(const json& j, const std::string& at)
{
    if (!j.is_array() || j.size() != 3) throw ParseError(at + ": expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Limits limits(const json& j, const std::string& at)
{
    if (j.is_number()) {
        const double v = j.get<double>();
        return {-v, v};
    }
    if (!j.is_array() || j.size() != 2) throw ParseError(at + ": expected number or [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Interval range(const json& j, const std::string& at)
{
    if (!j.is_array() || j.size() != 2) throw ParseError(at + ": expected [lo, hi]");
    const double lo = j[0].get<double>(), hi = j[1].get<double>();
    if (!(lo <= hi)) throw ModelError(at + ": lo > hi");
    return Interval(lo, hi);
}

Eigen::Matrix3d rpy_matrix(const Eigen::Vector3d& rpy)
{
    return (Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
}

bool is_psd(const Eigen::Matrix3d& I)
{
    if ((I - I.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(I, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -1e-12;
}

Interval scaled(double v, double frac) { return Interval(std::min(v * (1 - frac), v * (1 + frac)), std::max(v * (1 - frac), v * (1 + frac))); }

} // namespace

IntervalInertialParams make_interval_params(const InertialParams& nominal, const Uncertainty& u)
{
    IntervalInertialParams out(nominal.size());
    for (size_t j = 0; j < nominal.size(); ++j) {
        const auto& p = nominal[j];
        out[j].m = scaled(p.m, u.mass_frac);
        for (int i = 0; i < 3; ++i) out[j].c(i, 0) = Interval(p.c[i] - u.com_abs, p.c[i] + u.com_abs);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out[j].I(r, c) = scaled(p.I(r, c), u.inertia_frac);
    }
    return out;
}

IntervalInertialParams degenerate_params(const InertialParams& nominal) { return make_interval_params(nominal, {}); }

bool params_contain(const IntervalInertialParams& iv, const InertialParams& p)
{
    if (iv.size() != p.size()) return false;
    for (size_t j = 0; j < p.size(); ++j) {
        if (!iv[j].m.contains(p[j].m)) return false;
        if (!iv[j].c.contains(Eigen::MatrixXd(p[j].c))) return false;
        if (!iv[j].I.contains(Eigen::MatrixXd(p[j].I))) return false;
    }
    return true;
}

InertialParams midpoint_params(const IntervalInertialParams& iv)
{
    InertialParams out(iv.size());
    for (size_t j = 0; j < iv.size(); ++j) {
        out[j].m = iv[j].m.mid();
        out[j].c = iv[j].c.mid();
        out[j].I = iv[j].I.mid();
    }
    return out;
}

InertialParams sample_params(const IntervalInertialParams& iv, std::uint64_t seed, bool endpoints)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto draw = [&](const Interval& x) {
        if (endpoints) return u01(gen) < 0.5 ? x.lo() : x.hi();
        return x.lo() + (x.hi() - x.lo()) * u01(gen);
    };
    InertialParams out(iv.size());
    for (size_t j = 0; j < iv.size(); ++j) {
        out[j].m = draw(iv[j].m);
        for (int i = 0; i < 3; ++i) out[j].c[i] = draw(iv[j].c(i, 0));
        for (int attempt = 0;; ++attempt) {
            Eigen::Matrix3d I;
            for (int r = 0; r < 3; ++r)
                for (int c = r; c < 3; ++c) I(r, c) = I(c, r) = draw(iv[j].I(r, c));
            if (is_psd(I)) {
                out[j].I = I;
                break;
            }
            if (attempt == 100) {
                out[j].I = iv[j].I.mid();
                break;
            }
        }
    }
    return out;
}

LoadedRobot parse_model(const std::string& text, const std::string& origin)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    LoadedRobot out;
    auto& m = out.model;
    try {
        m.name = doc.value("name", std::string("robot"));
        const int n_q = doc.at("n_q").get<int>();
        const auto& joints = doc.at("joints");
        const auto& links = doc.at("links");
        const auto& inertia = doc.at("inertia");
        if (static_cast<int>(joints.size()) != n_q) throw ModelError("joints: expected n_q entries");
        if (static_cast<int>(links.size()) != n_q) throw ModelError("links: expected n_q entries");
        if (static_cast<int>(inertia.size()) != n_q) throw ModelError("inertia: expected n_q entries");
        for (int j = 0; j < n_q; ++j) {
            const std::string at = "joints[" + std::to_string(j) + "]";
            const auto& jj = joints[j];
            Joint jt;
            jt.axis = vec3(jj.at("axis"), at + ".axis");
            jt.translation = vec3(jj.at("translation"), at + ".translation");
            if (jj.contains("rpy")) jt.fixed_rotation = rpy_matrix(vec3(jj["rpy"], at + ".rpy"));
            jt.q_lim = limits(jj.at("q_lim"), at + ".q_lim");
            jt.qd_lim = limits(jj.at("qd_lim"), at + ".qd_lim");
            jt.u_lim = limits(jj.at("u_lim"), at + ".u_lim");
            m.joints.push_back(jt);

            const std::string lat = "links[" + std::to_string(j) + "]";
            Zonotope3 z;
            z.center = vec3(links[j].at("volume_center"), lat + ".volume_center");
            const auto& gens = links[j].at("volume_generators");
            z.generators.resize(3, static_cast<Eigen::Index>(gens.size()));
            for (size_t g = 0; g < gens.size(); ++g)
                z.generators.col(static_cast<Eigen::Index>(g)) =
                    vec3(gens[g], lat + ".volume_generators[" + std::to_string(g) + "]");
            m.links.push_back(z);

            const std::string iat = "inertia[" + std::to_string(j) + "]";
            LinkInertia li;
            li.m = inertia[j].at("m").get<double>();
            li.c = vec3(inertia[j].at("c"), iat + ".c");
            const auto& I = inertia[j].at("I");
            if (!I.is_array() || I.size() != 3) throw ParseError(iat + ".I: expected 3x3");
            for (int r = 0; r < 3; ++r) li.I.row(r) = vec3(I[r], iat + ".I[" + std::to_string(r) + "]");
            if (!(li.m > 0)) throw ModelError(iat + ".m: must be positive");
            if (!is_psd(li.I)) throw ModelError(iat + ".I: not symmetric positive semidefinite");
            out.nominal.push_back(li);
        }
        if (doc.contains("gravity")) m.gravity = vec3(doc["gravity"], "gravity");
        if (doc.contains("ee_offset")) m.ee_offset = vec3(doc["ee_offset"], "ee_offset");
        if (doc.contains("uncertainty")) {
            const auto& u = doc["uncertainty"];
            out.uncertainty.mass_frac = u.value("mass_frac", 0.0);
            out.uncertainty.inertia_frac = u.value("inertia_frac", out.uncertainty.mass_frac);
            out.uncertainty.com_abs = u.value("com_abs", 0.0);
        }
        out.interval = make_interval_params(out.nominal, out.uncertainty);
        out.controller.Kr = Eigen::VectorXd::Constant(n_q, 5.0);
        if (doc.contains("controller")) {
            const auto& c = doc["controller"];
            if (c.contains("Kr")) {
                if (c["Kr"].is_number())
                    out.controller.Kr = Eigen::VectorXd::Constant(n_q, c["Kr"].get<double>());
                else {
                    if (static_cast<int>(c["Kr"].size()) != n_q) throw ModelError("controller.Kr: expected n_q gains");
                    for (int j = 0; j < n_q; ++j) out.controller.Kr[j] = c["Kr"][j].get<double>();
                }
            }
            out.controller.V_M = c.value("V_M", out.controller.V_M);
            out.controller.alpha_c = c.value("alpha_c", out.controller.alpha_c);
            out.controller.sigma_m = c.value("sigma_m", 0.0);
            out.controller.sigma_M = c.value("sigma_M", 0.0);
        }
        // explicit endpoints override the fractional width
        for (int j = 0; j < n_q; ++j) {
            const auto& ij = inertia[j];
            const std::string iat = "inertia[" + std::to_string(j) + "]";
            if (ij.contains("m_range")) out.interval[j].m = range(ij["m_range"], iat + ".m_range");
            if (ij.contains("c_range"))
                for (int i = 0; i < 3; ++i)
                    out.interval[j].c(i, 0) = range(ij["c_range"].at(i), iat + ".c_range[" + std::to_string(i) + "]");
            if (ij.contains("I_range"))
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        out.interval[j].I(r, c) = range(ij["I_range"].at(r).at(c), iat + ".I_range");
            const InertialParams one{out.nominal[j]};
            if (!params_contain({out.interval[j]}, one)) throw ModelError(iat + ": nominal value outside its interval");
        }
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    m.validate();
    return out;
}

LoadedRobot load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str(), path);
}

Frame homog_transform(const RobotModel& model, int j, double q_j)
{
    if (j < 0 || j >= model.n_q()) throw RangeError("homog_transform: joint index " + std::to_string(j));
    const auto& jt = model.joints[static_cast<size_t>(j)];
    return {jt.fixed_rotation * Eigen::AngleAxisd(q_j, jt.axis).toRotationMatrix(), jt.translation};
}

std::vector<Frame> fk_point(const RobotModel& model, const Eigen::VectorXd& q)
{
    if (q.size() != model.n_q()) throw DimensionError("fk_point: q has wrong length");
    std::vector<Frame> out;
    Frame cur;
    for (int j = 0; j < model.n_q(); ++j) {
        const Frame h = homog_transform(model, j, q[j]);
        cur.p = cur.p + cur.R * h.p;
        cur.R = cur.R * h.R;
        out.push_back(cur);
    }
    return out;
}

Eigen::Vector3d end_effector(const RobotModel& model, const Eigen::VectorXd& q)
{
    const Frame f = fk_point(model, q).back();
    return f.p + f.R * model.ee_offset;
}

std::vector<Zonotope3> fo_point(const RobotModel& model, const Eigen::VectorXd& q)
{
    const auto frames = fk_point(model, q);
    std::vector<Zonotope3> out;
    for (size_t j = 0; j < frames.size(); ++j) {
        const auto& L = model.links[j];
        Zonotope3 z;
        z.center = frames[j].p + frames[j].R * L.center;
        z.generators = frames[j].R * L.generators;
        out.push_back(z);
    }
    return out;
}

EigenBounds eigen_bounds(const RobotModel& model, const IntervalInertialParams& params, int n_samples,
                         std::uint64_t seed, double low_factor, double high_factor)
{
    if (n_samples < 1) throw RangeError("eigen_bounds: n_samples must be >= 1");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    Eigen::VectorXd q(model.n_q());
    for (int s = 0; s < n_samples; ++s) {
        for (int j = 0; j < model.n_q(); ++j) {
            const auto& l = model.joints[static_cast<size_t>(j)].q_lim;
            const double a = std::max(l.lo, -M_PI), b = std::min(l.hi, M_PI);
            q[j] = a + (b - a) * u01(gen);
        }
        const auto p = sample_params(params, gen());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mass_matrix(model, q, p), Eigen::EigenvaluesOnly);
        const double emin = es.eigenvalues().minCoeff(), emax = es.eigenvalues().maxCoeff();
        if (!(emin > 0)) throw ModelError("eigen_bounds: mass matrix not positive definite at a sample");
        lo = std::min(lo, emin);
        hi = std::max(hi, emax);
    }
    return {lo * low_factor, hi * high_factor, lo, hi};
}

} // namespace armour
