#include "armour/solver.hpp"

#include "armour/errors.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace armour {

std::string to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::success: return "success";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::timeout: return "timeout";
    case SolveStatus::diverged: return "diverged";
    }
    return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

struct Search {
    const NlpProblem& p;
    const SolverOptions& o;
    Clock::time_point start;
    SolveResult best;
    bool have_feasible = false;
    Eigen::VectorXd lambda;
    double mu = 0.0;
    int evals = 0;

    bool out_of_time() const
    {
        return o.time_limit > 0 && std::chrono::duration<double>(Clock::now() - start).count() > o.time_limit;
    }

    Eigen::VectorXd project(const Eigen::VectorXd& x) const { return x.cwiseMax(p.lo).cwiseMin(p.hi); }

    // Augmented Lagrangian value and gradient; records feasible points on the way.
    double merit(const Eigen::VectorXd& x, Eigen::VectorXd& grad, Eigen::VectorXd* g_out = nullptr)
    {
        ++evals;
        Eigen::VectorXd fg, g;
        Eigen::MatrixXd J;
        const double f = p.cost(x, &fg);
        p.constraints(x, g, &J);
        if (!std::isfinite(f) || !g.allFinite()) throw DivergenceError("solver: non-finite cost or constraint");
        const double viol = g.size() ? g.maxCoeff() : -std::numeric_limits<double>::infinity();
        if (viol <= 0 && (!have_feasible || f < best.cost)) {
            have_feasible = true;
            best.x = x;
            best.cost = f;
            best.max_violation = viol;
        }
        if (lambda.size() != g.size()) lambda = Eigen::VectorXd::Zero(g.size());
        double L = f;
        grad = fg;
        for (int c = 0; c < g.size(); ++c) {
            const double m = lambda[c] + mu * (g[c] + o.shift);
            if (m > 0) {
                L += (m * m - lambda[c] * lambda[c]) / (2 * mu);
                grad += m * J.row(c).transpose();
            } else {
                L -= lambda[c] * lambda[c] / (2 * mu);
            }
        }
        if (g_out) *g_out = g;
        return L;
    }

    // Projected L-BFGS on the current merit. Returns false when the time limit hits.
    bool inner(Eigen::VectorXd& x, int& iters)
    {
        std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;
        Eigen::VectorXd grad;
        double L = merit(x, grad);
        for (int it = 0; it < o.max_inner; ++it, ++iters) {
            if (out_of_time()) return false;
            if ((project(x - grad) - x).cwiseAbs().maxCoeff() < o.grad_tol) break;
            // variables held at a bound by the gradient stay fixed
            Eigen::VectorXd free = Eigen::VectorXd::Ones(p.n);
            for (int i = 0; i < p.n; ++i)
                if ((x[i] <= p.lo[i] && grad[i] > 0) || (x[i] >= p.hi[i] && grad[i] < 0)) free[i] = 0;
            Eigen::VectorXd q = grad.cwiseProduct(free);
            std::vector<double> alpha(mem.size());
            for (int m = static_cast<int>(mem.size()) - 1; m >= 0; --m) {
                const auto& [s, y] = mem[m];
                alpha[m] = s.dot(q) / y.dot(s);
                q -= alpha[m] * y;
            }
            if (!mem.empty()) q *= mem.back().first.dot(mem.back().second) / mem.back().second.squaredNorm();
            for (size_t m = 0; m < mem.size(); ++m) {
                const auto& [s, y] = mem[m];
                q += s * (alpha[m] - y.dot(q) / y.dot(s));
            }
            Eigen::VectorXd d = -q.cwiseProduct(free);
            if (d.dot(grad) >= 0) {
                d = -grad.cwiseProduct(free);
                mem.clear();
            }
            if (d.squaredNorm() == 0) break;
            double step = 1.0;
            Eigen::VectorXd xn, gn;
            double Ln = L;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
                if (ls > 0 && out_of_time()) return false;
                xn = project(x + step * d);
                Ln = merit(xn, gn);
                if (Ln <= L + 1e-4 * grad.dot(xn - x)) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            const Eigen::VectorXd s = xn - x, y = gn - grad;
            if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
                mem.emplace_back(s, y);
                if (static_cast<int>(mem.size()) > o.memory) mem.pop_front();
            }
            const double dL = L - Ln;
            x = xn;
            grad = gn;
            L = Ln;
            if (dL < o.cost_tol * std::max(1.0, std::abs(L))) break;
        }
        return true;
    }
};

} // namespace

SolveResult AugmentedLagrangianSolver::solve(const NlpProblem& p, const Eigen::VectorXd& x0,
                                             const SolverOptions& opts) const
{
    if (x0.size() != p.n || p.lo.size() != p.n || p.hi.size() != p.n)
        throw DimensionError("solver: x0 and bounds must have n entries");
    Search s{p, opts, Clock::now(), {}, false, {}, opts.mu0, 0};
    Eigen::VectorXd x = s.project(x0);
    SolveResult out;
    double prev_viol = std::numeric_limits<double>::infinity();
    bool timed_out = false;
    try {
        for (int outer = 0; outer < opts.max_outer; ++outer) {
            ++out.outer_iterations;
            if (!s.inner(x, out.inner_iterations)) {
                timed_out = true;
                break;
            }
            Eigen::VectorXd grad, g;
            s.merit(x, grad, &g);
            const double viol = g.size() ? g.maxCoeff() : -1.0;
            for (int c = 0; c < g.size(); ++c) s.lambda[c] = std::max(0.0, s.lambda[c] + s.mu * (g[c] + opts.shift));
            if (viol <= 0 && s.have_feasible && outer > 0 &&
                std::abs(s.best.cost - out.cost) <= 1e-10 * std::max(1.0, std::abs(s.best.cost)))
                break;
            out.cost = s.have_feasible ? s.best.cost : out.cost;
            if (viol > 0 && viol > 0.25 * prev_viol) s.mu = std::min(opts.mu_max, s.mu * opts.mu_growth);
            prev_viol = std::max(viol, 0.0);
            if (s.out_of_time()) {
                timed_out = true;
                break;
            }
        }
    } catch (const DivergenceError&) {
        out.status = SolveStatus::diverged;
        out.x = x;
        out.evaluations = s.evals;
        out.wall_time = std::chrono::duration<double>(Clock::now() - s.start).count();
        return out;
    }
    out.evaluations = s.evals;
    out.hit_time_limit = timed_out;
    out.wall_time = std::chrono::duration<double>(Clock::now() - s.start).count();
    if (s.have_feasible) {
        out.status = SolveStatus::success;
        out.x = s.best.x;
        out.cost = s.best.cost;
        out.max_violation = s.best.max_violation;
    } else {
        out.status = timed_out ? SolveStatus::timeout : SolveStatus::infeasible;
        out.x = x;
        Eigen::VectorXd g;
        p.constraints(x, g, nullptr);
        out.max_violation = g.size() ? g.maxCoeff() : 0.0;
        out.cost = p.cost(x, nullptr);
    }
    return out;
}

} // namespace armour
