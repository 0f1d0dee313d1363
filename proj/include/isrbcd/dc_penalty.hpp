#pragma once

#include <string>

#include <Eigen/Core>

#include "isrbcd/blocks.hpp"

namespace isrbcd {

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Coordinate-separable penalty written as h = h1 - h2 with h1, h2 convex.
///
/// The regularization weight lambda is not part of the penalty; callers pass
/// it per evaluation so a single object serves a whole regularization path.
class DcPenalty {
public:
    virtual ~DcPenalty() = default;

    virtual double value(double t) const = 0;

    /// argmin_s 0.5 (s - v)^2 + c h(s), for c > 0.
    virtual double prox(double v, double c) const = 0;

    /// Subdifferential of h1 at t.
    virtual Interval convex_subdifferential(double t) const = 0;

    /// Gradient of h2 at t; h2 must be differentiable.
    virtual double concave_gradient(double t) const = 0;

    virtual double convex_part(double t) const = 0;
    virtual double concave_part(double t) const = 0;

    virtual std::string name() const = 0;
};

/// rho * log(1 + |t| / rho), split as h1 = |t|, h2 = |t| - rho log(1 + |t|/rho).
class LogSumPenalty final : public DcPenalty {
public:
    explicit LogSumPenalty(double rho);

    double rho() const { return rho_; }

    double value(double t) const override;
    double prox(double v, double c) const override;
    Interval convex_subdifferential(double t) const override;
    double concave_gradient(double t) const override;
    double convex_part(double t) const override;
    double concave_part(double t) const override;
    std::string name() const override { return "logsum"; }

private:
    double rho_;
};

/// |t|, with h2 = 0.
class L1Penalty final : public DcPenalty {
public:
    double value(double t) const override;
    double prox(double v, double c) const override;
    Interval convex_subdifferential(double t) const override;
    double concave_gradient(double) const override { return 0.0; }
    double convex_part(double t) const override;
    double concave_part(double) const override { return 0.0; }
    std::string name() const override { return "l1"; }
};

/// lambda * sum_t h(t); charges x.size() cost flops when a counter is given.
double penalty_value(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& x, double lambda,
                     FlopCounter* flops = nullptr);

/// Coordinate-wise prox of c*h; charges v.size() prox flops. Throws
/// std::invalid_argument unless c > 0.
Eigen::VectorXd prox(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& v, double c,
                     FlopCounter* flops = nullptr);

/// Distance from -grad + lambda * grad h2(t) to lambda * dh1(t): how far a
/// coordinate is from the stationarity condition 0 in grad + lambda (dh1 - dh2).
double coordinate_violation(const DcPenalty& penalty, double t, double grad, double lambda);

/// Infinity norm of coordinate_violation over a block.
double block_violation(const DcPenalty& penalty, const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& grad, double lambda);

} // namespace isrbcd
