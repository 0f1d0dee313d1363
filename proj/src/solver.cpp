#include "isrbcd/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "isrbcd/errors.hpp"

namespace isrbcd {

void SolverConfig::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(eta > 1.0)) throw std::invalid_argument("eta must exceed 1");
    if (!(theta_min > 0.0) || !(theta_min <= theta_max)) {
        throw std::invalid_argument("need 0 < theta_min <= theta_max");
    }
    if (!(theta_init > 0.0)) throw std::invalid_argument("theta_init must be positive");
    if (max_backtracks == 0) throw std::invalid_argument("max_backtracks must be positive");
    if (!(violation_tolerance >= 0.0)) throw std::invalid_argument("violation_tolerance must be non-negative");
    if (check_violation_every && *check_violation_every == 0) {
        throw std::invalid_argument("check_violation_every must be positive");
    }
    if (decrease_norm_power != 1 && decrease_norm_power != 2) {
        throw std::invalid_argument("decrease_norm_power must be 1 or 2");
    }
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::max_iterations: return "max_iterations";
    case Termination::violation_below_tolerance: return "violation_below_tolerance";
    case Termination::converged_zero_violations: return "converged_zero_violations";
    case Termination::backtrack_failure: return "backtrack_failure";
    }
    return "unknown";
}

ExactViolation exact_violation(const DesignProblem& problem, const BlockPartition& partition,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& margins, FlopCounter* flops) {
    const Eigen::VectorXd grad = full_gradient(*problem.loss, problem.features, margins, problem.labels, flops);
    ExactViolation out;
    out.per_block.resize(partition.num_blocks());
    for (std::size_t i = 0; i < partition.num_blocks(); ++i) {
        out.per_block[i] = block_violation(*problem.penalty, block_slice(x, partition, i),
                                           block_slice(grad, partition, i), problem.lambda);
        out.max = std::max(out.max, out.per_block[i]);
    }
    return out;
}

ExactViolation compute_exact_violation(const DesignProblem& problem, const BlockPartition& partition,
                                       const Eigen::VectorXd& x, FlopCounter* flops) {
    PredictionCache cache;
    refresh_cache(cache, problem.features, x, flops);
    return exact_violation(problem, partition, x, cache.margins, flops);
}

namespace {

double step_measure(const Eigen::Ref<const Eigen::VectorXd>& delta, int norm_power) {
    const double sq = delta.squaredNorm();
    return norm_power == 2 ? sq : std::sqrt(sq);
}

bool decrease_holds(double f_new, double f_old, double measure, double sigma) {
    if (!std::isfinite(f_new)) {
        return false;
    }
    return f_new <= f_old - 0.5 * sigma * measure;
}

} // namespace

bool sufficient_decrease_test(double f_new, double f_old, const Eigen::Ref<const Eigen::VectorXd>& x_new,
                              const Eigen::Ref<const Eigen::VectorXd>& x_old, double sigma, int norm_power) {
    if (x_new.size() != x_old.size()) {
        throw std::invalid_argument("iterates differ in length");
    }
    return decrease_holds(f_new, f_old, step_measure(x_new - x_old, norm_power), sigma);
}

double bb_step_update(double theta, const Eigen::Ref<const Eigen::VectorXd>& dx,
                      const Eigen::Ref<const Eigen::VectorXd>& dg, double theta_min, double theta_max) {
    if (dx.size() != dg.size()) {
        throw std::invalid_argument("dx and dg differ in length");
    }
    const double xx = dx.dot(dx);
    if (xx == 0.0) {
        return theta;
    }
    const double ratio = dx.dot(dg) / xx;
    if (!std::isfinite(ratio) || !(ratio > 0.0)) {
        return theta;
    }
    return std::clamp(ratio, theta_min, theta_max);
}

namespace {

struct StepOutcome {
    bool accepted = false;
    Eigen::VectorXd candidate;
    Eigen::VectorXd margins;
    double objective = 0.0;
    double penalty_block = 0.0;
    double measure = 0.0;
    std::size_t backtracks = 0;
    /// theta * gamma of the last attempt.
    double theta = 0.0;
};

double penalty_sum(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return penalty_value(penalty, x, 1.0);
}

// Proximal step on the columns [first, first + x_old.size()) with monotone
// backtracking. Each attempt charges one prox and, unless the block is left
// unchanged, one objective evaluation.
StepOutcome proximal_step(const DesignProblem& problem, const SolverConfig& config, const Eigen::VectorXd& margins,
                          std::size_t first, const Eigen::Ref<const Eigen::VectorXd>& x_old,
                          const Eigen::VectorXd& grad, double theta, double penalty_total, double penalty_old,
                          double f_old, FlopCounter& flops) {
    const auto width = static_cast<std::size_t>(x_old.size());
    const std::size_t n = problem.num_samples();
    StepOutcome out;
    double gamma = 1.0;
    for (std::size_t j = 0;; ++j) {
        const double step = 1.0 / (theta * gamma);
        const Eigen::VectorXd v = x_old - step * grad;
        const double c = problem.lambda * step;
        if (c > 0.0) {
            out.candidate = prox(*problem.penalty, v, c, &flops);
        } else {
            out.candidate = v;
            flops.charge(FlopCategory::prox, flops::prox(width));
        }
        const Eigen::VectorXd delta = out.candidate - x_old;
        out.measure = step_measure(delta, config.decrease_norm_power);
        out.backtracks = j;
        out.theta = theta * gamma;
        if (out.measure == 0.0) {
            // Fixed point of the prox map: nothing moves, so F is not re-evaluated.
            out.margins = margins;
            out.objective = f_old;
            out.penalty_block = penalty_old;
            out.accepted = true;
            return out;
        }
        out.margins = margins;
        add_columns(out.margins, problem.features, first, delta);
        double loss_new = std::numeric_limits<double>::infinity();
        try {
            loss_new = loss_value(*problem.loss, out.margins, problem.labels, &flops, width);
        } catch (const numerical_error&) {
            flops.charge(FlopCategory::cost, flops::cost(n, width));
        }
        out.penalty_block = penalty_sum(*problem.penalty, out.candidate);
        out.objective = loss_new + problem.lambda * ((penalty_total - penalty_old) + out.penalty_block);
        if (decrease_holds(out.objective, f_old, out.measure, config.sigma)) {
            out.accepted = true;
            return out;
        }
        if (j + 1 > config.max_backtracks) {
            return out;
        }
        gamma *= config.eta;
    }
}

class WallClock {
public:
    explicit WallClock(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
    double elapsed() const {
        if (!enabled_) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

void check_inputs(const DesignProblem& problem, const SolverConfig& config, const Eigen::VectorXd& x0) {
    problem.validate();
    config.validate();
    if (static_cast<std::size_t>(x0.size()) != problem.dim()) {
        throw std::invalid_argument("x0 length does not match problem dimension");
    }
}

} // namespace

SolveResult rbcd_solve(const DesignProblem& problem, const BlockPartition& partition, BlockSelector& selector,
                       const SolverConfig& config, const Eigen::VectorXd& x0) {
    check_inputs(problem, config, x0);
    if (partition.total_dim() != problem.dim()) {
        throw std::invalid_argument("partition does not match problem dimension");
    }
    if (selector.num_blocks() != partition.num_blocks()) {
        throw std::invalid_argument("selector and partition disagree on block count");
    }
    const WallClock clock(config.record_wall_time);
    const std::size_t m = partition.num_blocks();

    SolveResult res;
    res.final_iterate = x0;
    Eigen::VectorXd& x = res.final_iterate;
    FlopCounter& flops = res.flops;

    PredictionCache cache = make_cache(problem.features, x);
    double penalty_total = penalty_sum(*problem.penalty, x);
    double objective = loss_value(*problem.loss, cache.margins, problem.labels, &flops, problem.dim()) +
                       problem.lambda * penalty_total;

    if (selector.wants_violations()) {
        selector.initialize_violations(init_violations(problem, partition, x, cache.margins, &flops));
    }

    const auto zero_violations = [&] {
        const ViolationVector* z = selector.violations();
        return z != nullptr && z->max() == 0.0;
    };
    const auto check_due = [&](std::size_t k) {
        return config.check_violation_every && k % *config.check_violation_every == 0;
    };

    res.trace.push_back({0, flops.total(), objective, std::nullopt, clock.elapsed()});
    bool done = false;
    if (check_due(0)) {
        const double viol = exact_violation(problem, partition, x, cache.margins, &res.diagnostic_flops).max;
        res.trace.back().violation = viol;
        if (viol < config.violation_tolerance) {
            res.termination = Termination::violation_below_tolerance;
            done = true;
        }
    }
    if (!done && zero_violations()) {
        res.termination = Termination::converged_zero_violations;
        done = true;
    }

    Eigen::VectorXd thetas =
        Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m),
                                  std::clamp(config.theta_init, config.theta_min, config.theta_max));
    std::vector<Eigen::VectorXd> prev_x(m);
    std::vector<Eigen::VectorXd> prev_grad(m);

    for (std::size_t k = 1; !done && k <= config.max_iterations; ++k) {
        const std::size_t i = selector.next_block();
        const std::size_t first = partition.offset(i);
        const Eigen::VectorXd x_old = block_slice(x, partition, i);
        const FlopCounter flops_before = flops;
        Eigen::VectorXd x_before;
        if (config.observer) {
            x_before = x;
        }

        const Eigen::VectorXd grad = partial_gradient(*problem.loss, problem.features, cache.margins,
                                                      problem.labels, partition, i, &flops);
        if (selector.wants_violations()) {
            selector.observe_update(i, block_violation(*problem.penalty, x_old, grad, problem.lambda));
            if (zero_violations()) {
                res.termination = Termination::converged_zero_violations;
                break;
            }
        }
        if (prev_x[i].size() > 0) {
            thetas[i] = bb_step_update(thetas[i], x_old - prev_x[i], grad - prev_grad[i], config.theta_min,
                                       config.theta_max);
        }
        prev_x[i] = x_old;
        prev_grad[i] = grad;

        const double penalty_old = penalty_sum(*problem.penalty, x_old);
        StepOutcome step = proximal_step(problem, config, cache.margins, first, x_old, grad, thetas[i],
                                         penalty_total, penalty_old, objective, flops);

        const double objective_before = objective;
        if (step.accepted) {
            block_slice(x, partition, i) = step.candidate;
            cache.margins.swap(step.margins);
            ++cache.updates_since_refresh;
            penalty_total = (penalty_total - penalty_old) + step.penalty_block;
            objective = step.objective;
            thetas[i] = std::clamp(step.theta, config.theta_min, config.theta_max);
            if (config.cache_refresh_every > 0 && k % config.cache_refresh_every == 0) {
                refresh_cache(cache, problem.features, x, &flops);
            }
            res.iterations = k;
            res.trace.push_back({k, flops.total(), objective, std::nullopt, clock.elapsed()});
        }

        if (config.observer) {
            IterationEvent ev;
            ev.iteration = k;
            ev.block = i;
            ev.x_before = &x_before;
            ev.x_after = &x;
            ev.objective_before = objective_before;
            ev.objective_after = objective;
            ev.step_measure = step.measure;
            ev.backtracks = step.backtracks;
            ev.accepted = step.accepted;
            ev.theta = thetas[i];
            ev.flops_before = flops_before;
            ev.flops_after = flops;
            ev.approx_violations = selector.violations();
            config.observer(ev);
        }

        if (!step.accepted) {
            res.termination = Termination::backtrack_failure;
            break;
        }
        if (check_due(k)) {
            const double viol = exact_violation(problem, partition, x, cache.margins, &res.diagnostic_flops).max;
            res.trace.back().violation = viol;
            if (viol < config.violation_tolerance) {
                res.termination = Termination::violation_below_tolerance;
                break;
            }
        }
    }

    if (!res.trace.back().violation) {
        res.trace.back().violation =
            exact_violation(problem, partition, x, cache.margins, &res.diagnostic_flops).max;
    }
    res.final_objective = objective;
    res.final_violation = *res.trace.back().violation;
    res.thetas = thetas;
    return res;
}

SolveResult gist_solve(const DesignProblem& problem, const SolverConfig& config, const Eigen::VectorXd& x0) {
    check_inputs(problem, config, x0);
    const WallClock clock(config.record_wall_time);

    SolveResult res;
    res.final_iterate = x0;
    Eigen::VectorXd& x = res.final_iterate;
    FlopCounter& flops = res.flops;

    PredictionCache cache = make_cache(problem.features, x);
    double penalty_total = penalty_sum(*problem.penalty, x);
    double objective = loss_value(*problem.loss, cache.margins, problem.labels, &flops, problem.dim()) +
                       problem.lambda * penalty_total;
    res.trace.push_back({0, flops.total(), objective, std::nullopt, clock.elapsed()});

    double theta = std::clamp(config.theta_init, config.theta_min, config.theta_max);
    Eigen::VectorXd prev_x;
    Eigen::VectorXd prev_grad;

    for (std::size_t k = 1;; ++k) {
        // The gradient at x^{k-1} both certifies the previous iterate and
        // drives the next step; it is only charged if a step follows.
        FlopCounter grad_flops;
        const Eigen::VectorXd grad =
            full_gradient(*problem.loss, problem.features, cache.margins, problem.labels, &grad_flops);
        double viol = 0.0;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            viol = std::max(viol, coordinate_violation(*problem.penalty, x[j], grad[j], problem.lambda));
        }
        res.trace.back().violation = viol;
        if (viol < config.violation_tolerance) {
            res.diagnostic_flops.gradient_flops += grad_flops.gradient_flops;
            res.termination = Termination::violation_below_tolerance;
            break;
        }
        if (k > config.max_iterations) {
            res.diagnostic_flops.gradient_flops += grad_flops.gradient_flops;
            res.termination = Termination::max_iterations;
            break;
        }
        const FlopCounter flops_before = flops;
        flops.gradient_flops += grad_flops.gradient_flops;
        Eigen::VectorXd x_before;
        if (config.observer) {
            x_before = x;
        }

        if (prev_x.size() > 0) {
            theta = bb_step_update(theta, x - prev_x, grad - prev_grad, config.theta_min, config.theta_max);
        }
        prev_x = x;
        prev_grad = grad;

        StepOutcome step =
            proximal_step(problem, config, cache.margins, 0, x, grad, theta, penalty_total, penalty_total, objective,
                          flops);

        const double objective_before = objective;
        if (step.accepted) {
            x = step.candidate;
            cache.margins.swap(step.margins);
            ++cache.updates_since_refresh;
            penalty_total = (penalty_total - penalty_total) + step.penalty_block;
            objective = step.objective;
            theta = std::clamp(step.theta, config.theta_min, config.theta_max);
            if (config.cache_refresh_every > 0 && k % config.cache_refresh_every == 0) {
                refresh_cache(cache, problem.features, x, &flops);
            }
            res.iterations = k;
            res.trace.push_back({k, flops.total(), objective, std::nullopt, clock.elapsed()});
        }

        if (config.observer) {
            IterationEvent ev;
            ev.iteration = k;
            ev.block = 0;
            ev.x_before = &x_before;
            ev.x_after = &x;
            ev.objective_before = objective_before;
            ev.objective_after = objective;
            ev.step_measure = step.measure;
            ev.backtracks = step.backtracks;
            ev.accepted = step.accepted;
            ev.theta = theta;
            ev.flops_before = flops_before;
            ev.flops_after = flops;
            config.observer(ev);
        }

        if (!step.accepted) {
            // x^{k-1} is kept and its violation is already on the trace.
            res.termination = Termination::backtrack_failure;
            break;
        }
    }

    res.final_objective = objective;
    res.final_violation = *res.trace.back().violation;
    res.thetas = Eigen::VectorXd::Constant(1, theta);
    return res;
}

} // namespace isrbcd
