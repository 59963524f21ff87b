#include "armour/reachsets.hpp"

#include "armour/errors.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace armour {

PzTrig pz_trig(const std::vector<PolyZonotope>& Q, const ReachOptions& opts)
{
    const TaylorOptions t{opts.taylor_degree, opts.reduce_to};
    PzTrig out;
    for (const auto& q : Q) {
        out.cos_q.push_back(pz_taylor(AnalyticFunction::cos(), q, t));
        out.sin_q.push_back(pz_taylor(AnalyticFunction::sin(), q, t));
    }
    return out;
}

std::vector<PzFrame> pzfk(const RobotModel& model, const std::vector<PolyZonotope>& Q, const ReachOptions& opts)
{
    if (static_cast<int>(Q.size()) != model.n_q()) throw DimensionError("pzfk: Q must have n_q entries");
    return pzfk(model, pz_trig(Q, opts), opts);
}

std::vector<PzFrame> pzfk(const RobotModel& model, const PzTrig& trig, const ReachOptions& opts)
{
    const int n = model.n_q();
    if (static_cast<int>(trig.cos_q.size()) != n || static_cast<int>(trig.sin_q.size()) != n)
        throw DimensionError("pzfk: trig enclosures must have n_q entries");
    std::vector<PzFrame> out;
    PolyZonotope R = PolyZonotope::constant(Eigen::Matrix3d::Identity());
    PolyZonotope p = PolyZonotope::constant(Eigen::Vector3d::Zero());
    for (int j = 0; j < n; ++j) {
        const auto& jt = model.joints[j];
        p = pz_reduce(p + pz_mul(R, PolyZonotope::constant(jt.translation)), opts.reduce_to);
        R = pz_mul(R, pz_joint_rotation(jt, trig.cos_q[j], trig.sin_q[j], opts.reduce_to), opts.reduce_to);
        out.push_back({R, p});
    }
    return out;
}

std::vector<PolyZonotope> pz_forward_occupancy(const RobotModel& model, const std::vector<PzFrame>& frames,
                                               const ReachOptions& opts)
{
    if (frames.size() != model.links.size()) throw DimensionError("pz_forward_occupancy: one frame per link");
    std::vector<PolyZonotope> out;
    for (size_t j = 0; j < frames.size(); ++j) {
        const auto& L = model.links[j];
        const int ng = L.n_generators();
        PolyZonotope link = PolyZonotope::constant(L.center);
        if (ng > 0)
            link = PolyZonotope(3, 1, L.center, L.generators, Eigen::MatrixXi::Identity(ng, ng), fresh_ids(ng));
        out.push_back(pz_reduce(frames[j].p + pz_mul(frames[j].R, link), opts.reduce_to));
    }
    return out;
}

InputReachSet input_reach_set(const RobotModel& model, const BufferedPz& state, const PzTrig& trig,
                              const InertialParams& nominal, const IntervalInertialParams& params,
                              const ControllerConfig& cfg, const ReachOptions& opts)
{
    const int n = model.n_q();
    const PzJointState js{trig.cos_q, trig.sin_q, state.qd, state.qd_a, state.qdd_a};
    InputReachSet out;
    out.tau = pzrnea(model, js, pz_params(nominal), model.base_accel(), opts.reduce_to);
    const auto full = pzrnea(model, js, pz_params(params), model.base_accel(), opts.reduce_to);
    out.w_M.resize(n);
    for (int j = 0; j < n; ++j) {
        out.w.push_back(full[j] - out.tau[j]);
        const PzBounds b = pz_bounds(out.w[j]);
        out.w_M[j] = std::max(std::abs(b.inf[0]), std::abs(b.sup[0]));
    }
    out.robust_bound = robust_input_bound(cfg, out.w_M);
    for (int j = 0; j < n; ++j)
        out.input.push_back(
            out.tau[j] - PolyZonotope::variable(IndeterminateId::robust(static_cast<std::uint32_t>(j)), 0.0,
                                                out.robust_bound[j]));
    return out;
}

ReachSetBundle build_bundle(const ReachProblem& prob, const InitialCondition& init, const TrajectoryShape& shape,
                            const TimeGrid& grid, int i)
{
    if (!prob.model || !prob.nominal || !prob.params) throw StructureError("build_bundle: incomplete problem");
    const auto ub = uniform_bounds(prob.cfg);
    ReachSetBundle b;
    b.step = i;
    b.state = buffer_error_pz(desired_traj_pz(init, shape, grid, i), ub.eps_p, ub.eps_v, prob.cfg.Kr);
    b.trig = pz_trig(b.state.q, prob.opts);
    b.frames = pzfk(*prob.model, b.trig, prob.opts);
    b.fo = pz_forward_occupancy(*prob.model, b.frames, prob.opts);
    b.input = input_reach_set(*prob.model, b.state, b.trig, *prob.nominal, *prob.params, prob.cfg, prob.opts);
    return b;
}

std::vector<ReachSetBundle> build_bundles(const ReachProblem& prob, const InitialCondition& init,
                                          const TrajectoryShape& shape, const TimeGrid& grid, int threads,
                                          const std::function<bool()>& stop)
{
    const int n_t = grid.n_t;
    std::vector<ReachSetBundle> out(static_cast<size_t>(n_t));
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, n_t);
    if (threads <= 1) {
        for (int i = 0; i < n_t; ++i) {
            if (stop && stop()) return {};
            out[i] = build_bundle(prob, init, shape, grid, i);
        }
        return out;
    }
    std::atomic<int> next{0};
    std::atomic<bool> stopped{false};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < n_t && !stopped; i = next++) {
                if (stop && stop()) {
                    stopped = true;
                    break;
                }
                try {
                    out[i] = build_bundle(prob, init, shape, grid, i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    if (stopped) return {};
    return out;
}

} // namespace armour
