#pragma once

#include "armour/robot.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace armour {

// Outcome of one sampled property check. worst is the largest excess over the allowed
// value seen (<= 0 when every sample passed).
struct SuiteResult {
    std::string name;
    long samples = 0;
    long violations = 0;
    double worst = -1e300;
    double seconds = 0.0;
    std::string detail;

    bool passed() const { return samples > 0 && violations == 0; }
};

struct VerifyOptions {
    int samples = 10000;
    std::uint64_t seed = 1;
    double tol = 1e-9;  // absolute slack for floating-point rounding
};

SuiteResult check_interval_ops(const VerifyOptions& o = {});
// Sum, product, linear map, reduction and slicing against sampled points.
SuiteResult check_pz_ops(const VerifyOptions& o = {});
SuiteResult check_taylor(const VerifyOptions& o = {});
SuiteResult check_irnea(const LoadedRobot& robot, const VerifyOptions& o = {});
SuiteResult check_pzrnea(const LoadedRobot& robot, const VerifyOptions& o = {});
// Frames, forward occupancy and input reach sets of planner bundles against realized tracking states.
std::vector<SuiteResult> check_reach_sets(const LoadedRobot& robot, const VerifyOptions& o = {});

// Closed-loop runs with parameters at the interval endpoints and zero initial error:
// |r| <= eps, |e_j| <= eps_p_j and |ed_j| <= eps_v at every step.
SuiteResult check_tracking(const LoadedRobot& robot, int n_trajectories = 20, std::uint64_t seed = 1,
                           double dt = 1e-3);
// |v_j| against the robust-input bound at sampled states with |r| <= eps.
SuiteResult check_robust_bound(const LoadedRobot& robot, const VerifyOptions& o = {});
// Constraint gradients against central differences on random scenes; kinks are skipped.
SuiteResult check_gradients(const LoadedRobot& robot, int n_pairs = 100, std::uint64_t seed = 1,
                            double rel_tol = 1e-5);
// Sampled max over unit c of (a.c)(b.c) against (1 + a.b) / 2.
SuiteResult check_unit_product(int n_pairs = 50, int n_samples = 100000, std::uint64_t seed = 1, double tol = 1e-3);

std::vector<SuiteResult> verify_all(const LoadedRobot& robot, const VerifyOptions& o = {});

} // namespace armour
