#include "isrbcd/smooth_loss.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "isrbcd/errors.hpp"

namespace isrbcd {

double LogisticLoss::value(double margin, double label) const {
    const double t = label * margin;
    if (t < 0.0) {
        return -t + std::log1p(std::exp(t));
    }
    return std::log1p(std::exp(-t));
}

double LogisticLoss::derivative(double margin, double label) const {
    const double t = label * margin;
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return -label * e / (1.0 + e);
    }
    return -label / (1.0 + std::exp(t));
}

PredictionCache make_cache(const DesignMatrix& A, const Eigen::VectorXd& x) {
    PredictionCache cache;
    refresh_cache(cache, A, x);
    return cache;
}

void refresh_cache(PredictionCache& cache, const DesignMatrix& A, const Eigen::VectorXd& x, FlopCounter* flops) {
    if (x.size() != A.cols()) {
        throw std::invalid_argument("iterate length does not match design matrix columns");
    }
    cache.margins = Eigen::VectorXd::Zero(A.rows());
    add_columns(cache.margins, A, 0, x);
    cache.updates_since_refresh = 0;
    if (flops) {
        flops->charge(FlopCategory::cost, static_cast<std::uint64_t>(A.rows()) * static_cast<std::uint64_t>(A.cols()));
    }
}

double loss_value(const SmoothLoss& loss, const Eigen::VectorXd& margins, const Eigen::VectorXd& labels,
                  FlopCounter* flops, std::size_t width) {
    if (margins.size() != labels.size()) {
        throw std::invalid_argument("margins and labels differ in length");
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
        if (!std::isfinite(margins[j])) {
            throw numerical_error(fmt::format("non-finite margin at sample {}", j));
        }
        total += loss.value(margins[j], labels[j]);
    }
    if (!std::isfinite(total)) {
        throw numerical_error("loss value overflowed");
    }
    if (flops) {
        flops->charge(FlopCategory::cost, flops::cost(static_cast<std::size_t>(margins.size()), width));
    }
    return total;
}

namespace {

Eigen::VectorXd pointwise_derivative(const SmoothLoss& loss, const Eigen::VectorXd& margins,
                                     const Eigen::VectorXd& labels) {
    if (margins.size() != labels.size()) {
        throw std::invalid_argument("margins and labels differ in length");
    }
    Eigen::VectorXd d(margins.size());
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
        d[j] = loss.derivative(margins[j], labels[j]);
    }
    return d;
}

Eigen::VectorXd column_products(const DesignMatrix& A, const Eigen::VectorXd& weights, std::size_t first,
                                std::size_t count) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < count; ++c) {
        double acc = 0.0;
        for (DesignMatrix::InnerIterator it(A, static_cast<Eigen::Index>(first + c)); it; ++it) {
            acc += it.value() * weights[it.index()];
        }
        g[static_cast<Eigen::Index>(c)] = acc;
    }
    return g;
}

} // namespace

Eigen::VectorXd partial_gradient(const SmoothLoss& loss, const DesignMatrix& A, const Eigen::VectorXd& margins,
                                 const Eigen::VectorXd& labels, const BlockPartition& partition, std::size_t block,
                                 FlopCounter* flops) {
    if (partition.total_dim() != static_cast<std::size_t>(A.cols())) {
        throw std::invalid_argument("partition does not match design matrix columns");
    }
    const std::size_t first = partition.offset(block);
    const std::size_t width = partition.size(block);
    const Eigen::VectorXd lprime = pointwise_derivative(loss, margins, labels);
    if (flops) {
        flops->charge(FlopCategory::gradient, flops::gradient(static_cast<std::size_t>(A.rows()), width));
    }
    return column_products(A, lprime, first, width);
}

Eigen::VectorXd full_gradient(const SmoothLoss& loss, const DesignMatrix& A, const Eigen::VectorXd& margins,
                              const Eigen::VectorXd& labels, FlopCounter* flops) {
    const Eigen::VectorXd lprime = pointwise_derivative(loss, margins, labels);
    const auto width = static_cast<std::size_t>(A.cols());
    if (flops) {
        flops->charge(FlopCategory::gradient, flops::gradient(static_cast<std::size_t>(A.rows()), width));
    }
    return column_products(A, lprime, 0, width);
}

void add_columns(Eigen::VectorXd& margins, const DesignMatrix& A, std::size_t first_column,
                 const Eigen::Ref<const Eigen::VectorXd>& delta) {
    if (first_column + static_cast<std::size_t>(delta.size()) > static_cast<std::size_t>(A.cols()) ||
        margins.size() != A.rows()) {
        throw std::invalid_argument("column range or margin length mismatch");
    }
    for (Eigen::Index c = 0; c < delta.size(); ++c) {
        const double step = delta[c];
        if (step == 0.0) {
            continue;
        }
        for (DesignMatrix::InnerIterator it(A, static_cast<Eigen::Index>(first_column) + c); it; ++it) {
            margins[it.index()] += it.value() * step;
        }
    }
}

void update_cache(PredictionCache& cache, const DesignMatrix& A, const BlockPartition& partition, std::size_t block,
                  const Eigen::Ref<const Eigen::VectorXd>& old_values,
                  const Eigen::Ref<const Eigen::VectorXd>& new_values) {
    const std::size_t width = partition.size(block);
    if (static_cast<std::size_t>(old_values.size()) != width || static_cast<std::size_t>(new_values.size()) != width) {
        throw std::invalid_argument("block values do not match block size");
    }
    const Eigen::VectorXd delta = new_values - old_values;
    add_columns(cache.margins, A, partition.offset(block), delta);
    ++cache.updates_since_refresh;
}

} // namespace isrbcd
