#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <functional>
#include <string>

namespace armour {

// minimize f(x) subject to g(x) <= 0 and lo <= x <= hi.
struct NlpProblem {
    int n = 0;
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> cost;
    // g has one entry per constraint; jac (optional) is n_con x n.
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& g, Eigen::MatrixXd* jac)> constraints;
    Eigen::VectorXd lo, hi;
};

struct SolverOptions {
    // wall-clock budget for the whole solve; <= 0 means none
    double time_limit = 0.0;
    int max_outer = 40;
    int max_inner = 200;
    int memory = 6;
    double mu0 = 10.0;
    double mu_growth = 10.0;
    double mu_max = 1e8;
    // inner solves enforce g + shift <= 0 so that accepted points are strictly feasible
    double shift = 1e-7;
    double grad_tol = 1e-9;
    double cost_tol = 1e-12;
};

enum class SolveStatus { success, infeasible, timeout, diverged };

std::string to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::infeasible;
    Eigen::VectorXd x;
    double cost = 0.0;
    double max_violation = 0.0;  // max g(x)
    int outer_iterations = 0;
    int inner_iterations = 0;
    int evaluations = 0;
    double wall_time = 0.0;
    bool hit_time_limit = false;

    bool ok() const { return status == SolveStatus::success; }
};

class NlpSolver {
public:
    virtual ~NlpSolver() = default;
    virtual SolveResult solve(const NlpProblem& p, const Eigen::VectorXd& x0, const SolverOptions& opts) const = 0;
};

// Augmented Lagrangian outer loop, projected L-BFGS on the box inside. Returns the feasible
// point of lowest cost seen, so a time-limited solve still succeeds once any feasible point
// has been visited.
class AugmentedLagrangianSolver : public NlpSolver {
public:
    SolveResult solve(const NlpProblem& p, const Eigen::VectorXd& x0, const SolverOptions& opts) const override;
};

} // namespace armour
