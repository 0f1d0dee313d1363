#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isrbcd/blocks.hpp"
#include "isrbcd/problem.hpp"
#include "isrbcd/sampling.hpp"

namespace isrbcd {

/// Snapshot handed to SolverConfig::observer after every iteration.
struct IterationEvent {
    std::size_t iteration = 0;
    std::size_t block = 0;
    const Eigen::VectorXd* x_before = nullptr;
    const Eigen::VectorXd* x_after = nullptr;
    double objective_before = 0.0;
    double objective_after = 0.0;
    /// Squared (or plain, per decrease_norm_power) step length used by the decrease test.
    double step_measure = 0.0;
    std::size_t backtracks = 0;
    bool accepted = false;
    double theta = 0.0;
    FlopCounter flops_before;
    FlopCounter flops_after;
    /// z~ after this iteration's update; null when the selector keeps none.
    const ViolationVector* approx_violations = nullptr;
};

using IterationObserver = std::function<void(const IterationEvent&)>;

struct SolverConfig {
    double sigma = 1e-5;
    double eta = 2.0;
    double theta_min = 1e-10;
    double theta_max = 1e10;
    double theta_init = 1.0;
    std::size_t max_iterations = 1000;
    std::size_t max_backtracks = 60;
    /// Exact-violation stopping threshold (strict <); only consulted when the
    /// violation is known, i.e. always for GIST and on periodic checks for RBCD.
    double violation_tolerance = 0.0;
    /// RBCD: evaluate the exact violation every this many iterations (charged
    /// to SolveResult::diagnostic_flops). Unset disables the checks.
    std::optional<std::size_t> check_violation_every;
    /// Exponent of ||x_new - x_old|| in the sufficient-decrease test (1 or 2).
    int decrease_norm_power = 2;
    /// Full recompute of the cached predictions every this many iterations; 0 disables.
    std::size_t cache_refresh_every = 10000;
    bool record_wall_time = false;
    std::uint64_t seed = 0;
    IterationObserver observer;

    void validate() const;
};

enum class Termination { max_iterations, violation_below_tolerance, converged_zero_violations, backtrack_failure };

std::string to_string(Termination t);

struct SolveResult {
    Eigen::VectorXd final_iterate;
    std::vector<TraceRecord> trace;
    Termination termination = Termination::max_iterations;
    FlopCounter flops;
    /// Exact-violation evaluations made for monitoring only.
    FlopCounter diagnostic_flops;
    std::size_t iterations = 0;
    double final_objective = 0.0;
    double final_violation = 0.0;
    Eigen::VectorXd thetas;
};

struct ExactViolation {
    std::vector<double> per_block;
    double max = 0.0;
};

/// Per-block violations at x from one full gradient at the given margins (= A x).
ExactViolation exact_violation(const DesignProblem& problem, const BlockPartition& partition,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& margins,
                               FlopCounter* flops = nullptr);

/// As exact_violation, recomputing A x first (charged as n d cost flops).
ExactViolation compute_exact_violation(const DesignProblem& problem, const BlockPartition& partition,
                                       const Eigen::VectorXd& x, FlopCounter* flops = nullptr);

/// F_new <= F_old - sigma/2 ||x_new - x_old||^p; false for a non-finite F_new.
bool sufficient_decrease_test(double f_new, double f_old, const Eigen::Ref<const Eigen::VectorXd>& x_new,
                              const Eigen::Ref<const Eigen::VectorXd>& x_old, double sigma, int norm_power = 2);

/// Barzilai-Borwein curvature dx'dg / dx'dx clamped to [theta_min, theta_max];
/// keeps `theta` when dx = 0 or the ratio is non-positive or non-finite.
double bb_step_update(double theta, const Eigen::Ref<const Eigen::VectorXd>& dx,
                      const Eigen::Ref<const Eigen::VectorXd>& dg, double theta_min, double theta_max);

/// Randomized block-coordinate proximal gradient with monotone backtracking
/// and per-block BB step estimates.
SolveResult rbcd_solve(const DesignProblem& problem, const BlockPartition& partition, BlockSelector& selector,
                       const SolverConfig& config, const Eigen::VectorXd& x0);

/// Full-gradient proximal descent (GIST). Stops once the exact violation at
/// the current iterate drops below config.violation_tolerance.
SolveResult gist_solve(const DesignProblem& problem, const SolverConfig& config, const Eigen::VectorXd& x0);

} // namespace isrbcd
