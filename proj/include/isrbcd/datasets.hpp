#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "isrbcd/smooth_loss.hpp"

namespace isrbcd {

/// Per-column affine map x -> (x - mean) / scale; scale 0 marks a constant
/// column that is only centered.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

struct LabeledDataset {
    DesignMatrix features;
    Eigen::VectorXd labels; // entries in {-1, +1}
    std::optional<Standardization> standardization;

    std::size_t num_samples() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

/// Two Gaussian classes N(+mu, S) and N(-mu, S) on `n_relevant` coordinates,
/// i.i.d. N(0, 1) noise on the rest; S drawn from a Wishart W(I, T).
struct ToySpec {
    std::size_t n_train = 200;
    std::size_t n_test = 1000;
    std::size_t dim = 2000;
    std::size_t n_relevant = 20;
    std::uint64_t seed = 0;
    /// Scatter the relevant coordinates instead of placing them at 0..T-1.
    bool random_placement = false;
    /// One covariance for both classes; false draws an independent one per class.
    bool shared_covariance = true;
};

struct ToyData {
    LabeledDataset train;
    LabeledDataset test;
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov_positive;
    Eigen::MatrixXd cov_negative;
    std::vector<std::size_t> relevant;
};

/// Raw (unstandardized) draw; deterministic in spec.seed.
ToyData generate_toy(const ToySpec& spec);

Standardization fit_standardization(const LabeledDataset& data);
LabeledDataset apply_standardization(const LabeledDataset& data, const Standardization& stats);

/// Fits on train, applies the same map to both.
std::pair<LabeledDataset, LabeledDataset> standardize(const LabeledDataset& train, const LabeledDataset& test);

/// `label idx:val ...` with 1-based indices. The column count is the larger of
/// `min_dim` and the largest index seen. Two-class label schemes other than
/// {-1, +1} map to {-1, +1} in ascending order.
LabeledDataset load_libsvm(std::istream& in, std::size_t min_dim = 0);
LabeledDataset load_libsvm(const std::string& path, std::size_t min_dim = 0);

void write_libsvm(std::ostream& out, const LabeledDataset& data);
void write_libsvm(const std::string& path, const LabeledDataset& data);

LabeledDataset select_rows(const LabeledDataset& data, const std::vector<std::size_t>& rows);

/// Seeded shuffle, then the first floor(fraction * n) rows train.
std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data, double train_fraction,
                                                           std::uint64_t seed);

/// Fraction of rows with sign(a_j' x) == y_j; a zero margin counts as an error.
double classification_rate(const LabeledDataset& data, const Eigen::VectorXd& x);

} // namespace isrbcd
