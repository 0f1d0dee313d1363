#include "isrbcd/dc_penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isrbcd {

namespace {

// Ties between 0 and an interior minimizer resolve to 0.
constexpr double prox_tie_tolerance = 1e-12;

double sign_of(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

} // namespace

LogSumPenalty::LogSumPenalty(double rho) : rho_(rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw std::invalid_argument("log-sum penalty needs rho > 0");
    }
}

double LogSumPenalty::value(double t) const { return rho_ * std::log1p(std::abs(t) / rho_); }

double LogSumPenalty::prox(double v, double c) const {
    const double a = std::abs(v);
    if (a == 0.0) {
        return 0.0;
    }
    // Stationary points on (0, a] solve s^2 + (rho - a) s + (c rho - a rho) = 0.
    const auto objective = [&](double s) { return 0.5 * (s - a) * (s - a) + c * rho_ * std::log1p(s / rho_); };
    double best = 0.0;
    double best_obj = 0.5 * a * a;
    const double disc = (a + rho_) * (a + rho_) - 4.0 * c * rho_;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        for (double s : {0.5 * (a - rho_ + root), 0.5 * (a - rho_ - root)}) {
            if (s > 0.0 && s <= a) {
                const double obj = objective(s);
                if (obj < best_obj - prox_tie_tolerance) {
                    best = s;
                    best_obj = obj;
                }
            }
        }
    }
    return std::copysign(best, v);
}

Interval LogSumPenalty::convex_subdifferential(double t) const {
    if (t == 0.0) {
        return {-1.0, 1.0};
    }
    return {sign_of(t), sign_of(t)};
}

double LogSumPenalty::concave_gradient(double t) const {
    const double a = std::abs(t);
    return sign_of(t) * a / (rho_ + a);
}

double LogSumPenalty::convex_part(double t) const { return std::abs(t); }

double LogSumPenalty::concave_part(double t) const { return std::abs(t) - value(t); }

double L1Penalty::value(double t) const { return std::abs(t); }

double L1Penalty::prox(double v, double c) const { return std::copysign(std::max(std::abs(v) - c, 0.0), v); }

Interval L1Penalty::convex_subdifferential(double t) const {
    if (t == 0.0) {
        return {-1.0, 1.0};
    }
    return {sign_of(t), sign_of(t)};
}

double L1Penalty::convex_part(double t) const { return std::abs(t); }

double penalty_value(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& x, double lambda,
                     FlopCounter* flops) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        sum += penalty.value(x[j]);
    }
    if (flops) {
        flops->charge(FlopCategory::cost, static_cast<std::uint64_t>(x.size()));
    }
    return lambda * sum;
}

Eigen::VectorXd prox(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& v, double c,
                     FlopCounter* flops) {
    if (!(c > 0.0)) {
        throw std::invalid_argument("prox scale must be positive");
    }
    Eigen::VectorXd out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        out[j] = penalty.prox(v[j], c);
    }
    if (flops) {
        flops->charge(FlopCategory::prox, flops::prox(static_cast<std::size_t>(v.size())));
    }
    return out;
}

double coordinate_violation(const DcPenalty& penalty, double t, double grad, double lambda) {
    const double target = -grad + lambda * penalty.concave_gradient(t);
    const Interval sub = penalty.convex_subdifferential(t);
    const double lo = lambda * sub.lo;
    const double hi = lambda * sub.hi;
    if (target < lo) {
        return lo - target;
    }
    if (target > hi) {
        return target - hi;
    }
    return 0.0;
}

double block_violation(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& grad, double lambda) {
    if (x.size() != grad.size()) {
        throw std::invalid_argument("block values and gradient differ in length");
    }
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        worst = std::max(worst, coordinate_violation(penalty, x[j], grad[j], lambda));
    }
    return worst;
}

} // namespace isrbcd
