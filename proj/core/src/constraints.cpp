#include "armour/constraints.hpp"

#include "armour/errors.hpp"

#include <cmath>

namespace armour {

namespace {

bool is_axis_box(const Zonotope3& z)
{
    if (z.n_generators() != 3) return false;
    bool seen[3] = {false, false, false};
    for (int g = 0; g < 3; ++g) {
        int nz = 0, axis = -1;
        for (int d = 0; d < 3; ++d)
            if (z.generators(d, g) != 0.0) ++nz, axis = d;
        if (nz != 1 || seen[axis]) return false;
        seen[axis] = true;
    }
    return true;
}

} // namespace

Halfspaces obstacle_halfspaces(const Zonotope3& z)
{
    const Eigen::MatrixXd& G = z.generators;
    const int ng = z.n_generators();
    if (ng < 3 || Eigen::FullPivLU<Eigen::MatrixXd>(G).rank() < 3)
        throw DegeneracyError("obstacle_halfspaces: zonotope is not full-dimensional");
    Halfspaces hs;
    if (is_axis_box(z)) {
        const Eigen::Vector3d r = z.radius();
        hs.A.resize(6, 3);
        hs.A << Eigen::Matrix3d::Identity(), -Eigen::Matrix3d::Identity();
        hs.b.resize(6);
        hs.b << z.center + r, -z.center + r;
        return hs;
    }
    const double scale = G.cwiseAbs().maxCoeff();
    std::vector<Eigen::Vector3d> normals;
    for (int i = 0; i < ng; ++i)
        for (int j = i + 1; j < ng; ++j) {
            Eigen::Vector3d n = Eigen::Vector3d(G.col(i)).cross(Eigen::Vector3d(G.col(j)));
            if (n.norm() <= 1e-12 * scale * scale) continue;
            n.normalize();
            bool dup = false;
            for (const auto& m : normals) dup |= std::abs(std::abs(m.dot(n)) - 1.0) < 1e-12;
            if (!dup) normals.push_back(n);
        }
    const int nf = static_cast<int>(normals.size());
    hs.A.resize(2 * nf, 3);
    hs.b.resize(2 * nf);
    for (int f = 0; f < nf; ++f) {
        const Eigen::Vector3d& n = normals[f];
        const double d = n.dot(z.center), delta = (n.transpose() * G).cwiseAbs().sum();
        hs.A.row(f) = n.transpose();
        hs.b[f] = d + delta;
        hs.A.row(nf + f) = -n.transpose();
        hs.b[nf + f] = -d + delta;
    }
    return hs;
}

Obstacle Obstacle::box(const Eigen::Vector3d& center, const Eigen::Vector3d& half_widths)
{
    if ((half_widths.array() <= 0).any()) throw DegeneracyError("Obstacle::box: half widths must be positive");
    Zonotope3 z;
    z.center = center;
    z.generators = half_widths.asDiagonal();
    return from_zonotope(z);
}

Obstacle Obstacle::from_zonotope(const Zonotope3& z) { return {z, obstacle_halfspaces(z)}; }

double collision_constraint(const PolyZonotope& fo, const Obstacle& obs, const Eigen::VectorXd& k,
                            Eigen::VectorXd* grad)
{
    const PolyZonotope f = pz_add_constant(pz_linear_map(obs.hs.A, fo), -obs.hs.b);
    const SlicedBounds sb(f, static_cast<int>(k.size()));
    double best = -1e300;
    Eigen::VectorXd g;
    for (int r = 0; r < sb.rows(); ++r) {
        const double v = sb.inf(r, k, grad ? &g : nullptr);
        if (v > best) {
            best = v;
            if (grad) *grad = -g;
        }
    }
    return -best;
}

ConstraintSet::ConstraintSet(const RobotModel& model, const std::vector<ReachSetBundle>& bundles,
                             const std::vector<Obstacle>& obstacles, const ConstraintOptions& opts)
    : n_k_(model.n_q()), margin_(opts.obstacle_margin)
{
    const int n = model.n_q();
    auto add_box = [&](const std::vector<PolyZonotope>& sets, ConstraintKind lo_kind, ConstraintKind hi_kind,
                       int step, auto limit) {
        bounds_.emplace_back(pz_vstack(sets), n_k_);
        const int bi = static_cast<int>(bounds_.size()) - 1;
        for (int j = 0; j < n; ++j) {
            const Limits l = limit(model.joints[j]);
            info_.push_back({lo_kind, step, j, -1});
            entries_.push_back({bi, j, 0, l.lo});
            info_.push_back({hi_kind, step, j, -1});
            entries_.push_back({bi, j, 0, l.hi});
        }
    };
    for (const auto& b : bundles) {
        if (opts.position)
            add_box(b.state.q, ConstraintKind::q_lo, ConstraintKind::q_hi, b.step, [](const Joint& j) { return j.q_lim; });
        if (opts.velocity)
            add_box(b.state.qd, ConstraintKind::qd_lo, ConstraintKind::qd_hi, b.step,
                    [](const Joint& j) { return j.qd_lim; });
        if (opts.input)
            add_box(b.input.input, ConstraintKind::u_lo, ConstraintKind::u_hi, b.step,
                    [](const Joint& j) { return j.u_lim; });
        for (size_t o = 0; o < obstacles.size(); ++o) {
            const auto& hs = obstacles[o].hs;
            for (size_t j = 0; j < b.fo.size(); ++j) {
                SlicedBounds sb(pz_add_constant(pz_linear_map(hs.A, b.fo[j]), -hs.b), n_k_);
                if (opts.prune) {
                    double sep = -1e300;
                    for (int r = 0; r < sb.rows(); ++r) sep = std::max(sep, sb.min_inf(r));
                    if (sep > margin_) {
                        ++pruned_;
                        continue;
                    }
                }
                bounds_.push_back(std::move(sb));
                info_.push_back({ConstraintKind::obstacle, b.step, static_cast<int>(j), static_cast<int>(o)});
                entries_.push_back({static_cast<int>(bounds_.size()) - 1, 0, static_cast<int>(hs.b.size()), 0.0});
            }
        }
    }
}

double ConstraintSet::value(int c, const Eigen::VectorXd& k, Eigen::VectorXd* grad) const
{
    if (k.size() != n_k_) throw DimensionError("ConstraintSet: k has wrong length");
    const ConstraintInfo& in = info_.at(c);
    const Entry& e = entries_[c];
    const SlicedBounds& sb = bounds_[e.bounds];
    switch (in.kind) {
    case ConstraintKind::q_lo:
    case ConstraintKind::qd_lo:
    case ConstraintKind::u_lo: {
        const double v = e.limit - sb.inf(e.row, k, grad);
        if (grad) *grad = -*grad;
        return v;
    }
    case ConstraintKind::q_hi:
    case ConstraintKind::qd_hi:
    case ConstraintKind::u_hi:
        return sb.sup(e.row, k, grad) - e.limit;
    case ConstraintKind::obstacle:
        break;
    }
    double best = -1e300;
    Eigen::VectorXd g;
    for (int r = 0; r < e.n_faces; ++r) {
        const double v = sb.inf(r, k, grad ? &g : nullptr);
        if (v > best) {
            best = v;
            if (grad) *grad = -g;
        }
    }
    return -best + margin_;
}

void ConstraintSet::evaluate(const Eigen::VectorXd& k, Eigen::VectorXd& h, Eigen::MatrixXd* jac) const
{
    h.resize(size());
    if (jac) jac->resize(size(), n_k_);
    Eigen::VectorXd g;
    for (int c = 0; c < size(); ++c) {
        h[c] = value(c, k, jac ? &g : nullptr);
        if (jac) jac->row(c) = g.transpose();
    }
}

double ConstraintSet::max_violation(const Eigen::VectorXd& k) const
{
    double m = -1e300;
    for (int c = 0; c < size(); ++c) m = std::max(m, value(c, k));
    return m;
}

} // namespace armour
