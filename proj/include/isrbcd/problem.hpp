#pragma once

#include <cstddef>
#include <memory>

#include <Eigen/Core>

#include "isrbcd/dc_penalty.hpp"
#include "isrbcd/smooth_loss.hpp"

namespace isrbcd {

/// min_x f(x) + lambda h(x) with f(x) = sum_j L((Ax)_j; y_j).
struct DesignProblem {
    DesignMatrix features;
    Eigen::VectorXd labels;
    std::shared_ptr<const SmoothLoss> loss;
    std::shared_ptr<const DcPenalty> penalty;
    double lambda = 0.0;

    std::size_t num_samples() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

    /// Throws std::invalid_argument on inconsistent sizes, missing loss or
    /// penalty, or a negative lambda.
    void validate() const;

    double objective(const Eigen::VectorXd& x) const;
};

} // namespace isrbcd
