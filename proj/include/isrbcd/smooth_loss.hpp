#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "isrbcd/blocks.hpp"

namespace isrbcd {

/// n x d, column-major so block columns A_i are contiguous.
using DesignMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Pointwise data-fit term L(margin; label) of f(x) = sum_j L((Ax)_j; y_j).
class SmoothLoss {
public:
    virtual ~SmoothLoss() = default;
    virtual double value(double margin, double label) const = 0;
    /// dL/dmargin
    virtual double derivative(double margin, double label) const = 0;
    virtual std::string name() const = 0;
};

/// log(1 + exp(-y t)), evaluated as a softplus so large margins neither
/// overflow nor lose the tail.
class LogisticLoss final : public SmoothLoss {
public:
    double value(double margin, double label) const override;
    double derivative(double margin, double label) const override;
    std::string name() const override { return "logistic"; }
};

/// Cached predictions Ax for the current iterate.
struct PredictionCache {
    Eigen::VectorXd margins;
    std::size_t updates_since_refresh = 0;
};

PredictionCache make_cache(const DesignMatrix& A, const Eigen::VectorXd& x);

/// Recompute margins = A x from scratch; charges n*d cost flops when a counter is given.
void refresh_cache(PredictionCache& cache, const DesignMatrix& A, const Eigen::VectorXd& x,
                   FlopCounter* flops = nullptr);

/// sum_j L(margins_j; labels_j). When `flops` is given, charges the cost of an
/// objective evaluation whose margins were refreshed over `width` columns,
/// i.e. n*width + n. Throws numerical_error on a non-finite margin or value.
double loss_value(const SmoothLoss& loss, const Eigen::VectorXd& margins, const Eigen::VectorXd& labels,
                  FlopCounter* flops = nullptr, std::size_t width = 0);

/// A_i^T L'(margins); charges 2 n d_i + n gradient flops.
Eigen::VectorXd partial_gradient(const SmoothLoss& loss, const DesignMatrix& A,
                                 const Eigen::VectorXd& margins, const Eigen::VectorXd& labels,
                                 const BlockPartition& partition, std::size_t block,
                                 FlopCounter* flops = nullptr);

/// A^T L'(margins); charges 2 n d + n gradient flops.
Eigen::VectorXd full_gradient(const SmoothLoss& loss, const DesignMatrix& A, const Eigen::VectorXd& margins,
                              const Eigen::VectorXd& labels, FlopCounter* flops = nullptr);

/// margins += A[:, first : first + delta.size()] * delta
void add_columns(Eigen::VectorXd& margins, const DesignMatrix& A, std::size_t first_column,
                 const Eigen::Ref<const Eigen::VectorXd>& delta);

/// Incremental refresh after block `block` moved from `old_values` to `new_values`.
void update_cache(PredictionCache& cache, const DesignMatrix& A, const BlockPartition& partition,
                  std::size_t block, const Eigen::Ref<const Eigen::VectorXd>& old_values,
                  const Eigen::Ref<const Eigen::VectorXd>& new_values);

} // namespace isrbcd
