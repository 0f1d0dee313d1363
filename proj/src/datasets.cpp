#include "isrbcd/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include "isrbcd/errors.hpp"
#include "isrbcd/sampling.hpp"

namespace isrbcd {

namespace {

DesignMatrix to_sparse(const Eigen::MatrixXd& dense) {
    DesignMatrix out = dense.sparseView();
    out.makeCompressed();
    return out;
}

Eigen::MatrixXd wishart_identity(std::size_t t, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(t, t);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
        for (Eigen::Index c = 0; c < g.cols(); ++c) {
            g(r, c) = normal(rng);
        }
    }
    return g * g.transpose();
}

Eigen::MatrixXd jittered_factor(const Eigen::MatrixXd& cov) {
    const auto t = cov.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(cov + 1e-10 * Eigen::MatrixXd::Identity(t, t));
    if (llt.info() != Eigen::Success) {
        throw numerical_error("covariance factorization failed");
    }
    return llt.matrixL();
}

LabeledDataset sample_classes(std::size_t n, const ToySpec& spec, const Eigen::VectorXd& mu,
                              const Eigen::MatrixXd& factor_pos, const Eigen::MatrixXd& factor_neg,
                              const std::vector<std::size_t>& relevant, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t t = relevant.size();
    const std::size_t n_pos = n - n / 2;
    Eigen::MatrixXd x(n, spec.dim);
    Eigen::VectorXd y(n);
    std::vector<bool> is_relevant(spec.dim, false);
    for (std::size_t r : relevant) {
        is_relevant[r] = true;
    }
    Eigen::VectorXd z(t);
    for (std::size_t row = 0; row < n; ++row) {
        const bool positive = row < n_pos;
        y[row] = positive ? 1.0 : -1.0;
        for (std::size_t k = 0; k < t; ++k) {
            z[k] = normal(rng);
        }
        const Eigen::VectorXd rel = (positive ? mu : Eigen::VectorXd(-mu)) + (positive ? factor_pos : factor_neg) * z;
        for (std::size_t k = 0; k < t; ++k) {
            x(row, relevant[k]) = rel[k];
        }
        for (std::size_t c = 0; c < spec.dim; ++c) {
            if (!is_relevant[c]) {
                x(row, c) = normal(rng);
            }
        }
    }
    return {to_sparse(x), y, std::nullopt};
}

} // namespace

ToyData generate_toy(const ToySpec& spec) {
    if (spec.n_train == 0 || spec.n_test == 0 || spec.dim == 0 || spec.n_relevant == 0) {
        throw std::invalid_argument("toy sizes must be positive");
    }
    if (spec.n_relevant > spec.dim) {
        throw std::invalid_argument("n_relevant cannot exceed dim");
    }
    Rng rng(spec.seed);
    ToyData out;

    const std::size_t t = spec.n_relevant;
    out.relevant.resize(t);
    if (spec.random_placement) {
        std::vector<std::size_t> all(spec.dim);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng);
        std::copy_n(all.begin(), t, out.relevant.begin());
        std::sort(out.relevant.begin(), out.relevant.end());
    } else {
        std::iota(out.relevant.begin(), out.relevant.end(), 0);
    }

    out.mu.resize(static_cast<Eigen::Index>(t));
    for (std::size_t k = 0; k < t; ++k) {
        out.mu[static_cast<Eigen::Index>(k)] = (rng() >> 63) ? 1.0 : -1.0;
    }
    out.cov_positive = wishart_identity(t, rng);
    out.cov_negative = spec.shared_covariance ? out.cov_positive : wishart_identity(t, rng);
    const Eigen::MatrixXd factor_pos = jittered_factor(out.cov_positive);
    const Eigen::MatrixXd factor_neg = spec.shared_covariance ? factor_pos : jittered_factor(out.cov_negative);

    out.train = sample_classes(spec.n_train, spec, out.mu, factor_pos, factor_neg, out.relevant, rng);
    out.test = sample_classes(spec.n_test, spec, out.mu, factor_pos, factor_neg, out.relevant, rng);
    return out;
}

Standardization fit_standardization(const LabeledDataset& data) {
    const Eigen::MatrixXd x = Eigen::MatrixXd(data.features);
    const double n = static_cast<double>(x.rows());
    Standardization s;
    s.mean = x.colwise().sum().transpose() / n;
    s.scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - s.mean[c]).square().sum() / n;
        const double sd = std::sqrt(var);
        // Constant columns leave only round-off after centering.
        s.scale[c] = sd > 1e-12 * (1.0 + std::abs(s.mean[c])) ? sd : 0.0;
    }
    return s;
}

LabeledDataset apply_standardization(const LabeledDataset& data, const Standardization& stats) {
    if (static_cast<std::size_t>(stats.mean.size()) != data.dim()) {
        throw std::invalid_argument("standardization does not match column count");
    }
    Eigen::MatrixXd x = Eigen::MatrixXd(data.features);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        x.col(c).array() -= stats.mean[c];
        if (stats.scale[c] > 0.0) {
            x.col(c) /= stats.scale[c];
        }
    }
    return {to_sparse(x), data.labels, stats};
}

std::pair<LabeledDataset, LabeledDataset> standardize(const LabeledDataset& train, const LabeledDataset& test) {
    const Standardization stats = fit_standardization(train);
    return {apply_standardization(train, stats), apply_standardization(test, stats)};
}

LabeledDataset load_libsvm(std::istream& in, std::size_t min_dim) {
    std::vector<Eigen::Triplet<double>> entries;
    std::vector<double> raw_labels;
    std::size_t max_col = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream tokens(line);
        std::string token;
        if (!(tokens >> token)) {
            continue;
        }
        char* end = nullptr;
        const double label = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || !std::isfinite(label)) {
            throw parse_error("bad label '" + token + "'", line_no);
        }
        const auto row = static_cast<int>(raw_labels.size());
        raw_labels.push_back(label);
        std::set<std::size_t> seen;
        while (tokens >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos) {
                throw parse_error("expected index:value, got '" + token + "'", line_no);
            }
            std::size_t idx = 0;
            auto [ptr, ec] = std::from_chars(token.data(), token.data() + colon, idx);
            if (ec != std::errc() || ptr != token.data() + colon || idx == 0) {
                throw parse_error("bad feature index in '" + token + "'", line_no);
            }
            const std::string value_text = token.substr(colon + 1);
            const double value = std::strtod(value_text.c_str(), &end);
            if (value_text.empty() || end != value_text.c_str() + value_text.size() || !std::isfinite(value)) {
                throw parse_error("bad feature value in '" + token + "'", line_no);
            }
            if (!seen.insert(idx).second) {
                throw parse_error(fmt::format("duplicate feature index {}", idx), line_no);
            }
            max_col = std::max(max_col, idx);
            if (value != 0.0) {
                entries.emplace_back(row, static_cast<int>(idx - 1), value);
            }
        }
    }

    const std::set<double> distinct(raw_labels.begin(), raw_labels.end());
    if (distinct.size() > 2) {
        throw unsupported_problem(fmt::format("{} distinct labels; only two-class data is supported", distinct.size()));
    }
    const bool plus_minus = std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 1.0 || v == -1.0; });
    if (!plus_minus && distinct.size() != 2) {
        throw unsupported_problem("cannot infer a two-class labeling from a single label value");
    }

    LabeledDataset data;
    data.labels.resize(static_cast<Eigen::Index>(raw_labels.size()));
    for (std::size_t r = 0; r < raw_labels.size(); ++r) {
        const double v = raw_labels[r];
        data.labels[static_cast<Eigen::Index>(r)] = plus_minus ? v : (v == *distinct.begin() ? -1.0 : 1.0);
    }
    data.features.resize(static_cast<Eigen::Index>(raw_labels.size()),
                         static_cast<Eigen::Index>(std::max(max_col, min_dim)));
    data.features.setFromTriplets(entries.begin(), entries.end());
    data.features.makeCompressed();
    return data;
}

LabeledDataset load_libsvm(const std::string& path, std::size_t min_dim) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open " + path);
    }
    return load_libsvm(in, min_dim);
}

void write_libsvm(std::ostream& out, const LabeledDataset& data) {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = data.features;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        out << (data.labels[r] > 0 ? "+1" : "-1");
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rows, r); it; ++it) {
            if (it.value() != 0.0) {
                out << ' ' << (it.index() + 1) << ':' << format_real(it.value());
            }
        }
        out << '\n';
    }
}

void write_libsvm(const std::string& path, const LabeledDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot open " + path + " for writing");
    }
    write_libsvm(out, data);
    if (!out) {
        throw io_error("failed writing " + path);
    }
}

LabeledDataset select_rows(const LabeledDataset& data, const std::vector<std::size_t>& rows) {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> by_row = data.features;
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::VectorXd labels(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(rows[k]);
        if (r >= by_row.rows()) {
            throw std::invalid_argument("row index out of range");
        }
        labels[static_cast<Eigen::Index>(k)] = data.labels[r];
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(by_row, r); it; ++it) {
            entries.emplace_back(static_cast<int>(k), static_cast<int>(it.index()), it.value());
        }
    }
    LabeledDataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
    out.features.setFromTriplets(entries.begin(), entries.end());
    out.features.makeCompressed();
    out.labels = std::move(labels);
    out.standardization = data.standardization;
    return out;
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& data, double train_fraction,
                                                           std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    }
    const std::size_t n = data.num_samples();
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    if (n_train == 0 || n_train >= n) {
        throw std::invalid_argument(fmt::format("fraction {} of {} rows leaves an empty side", train_fraction, n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    const std::vector<std::size_t> test_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return {select_rows(data, train_rows), select_rows(data, test_rows)};
}

double classification_rate(const LabeledDataset& data, const Eigen::VectorXd& x) {
    if (static_cast<std::size_t>(x.size()) != data.dim()) {
        throw std::invalid_argument("weight vector does not match feature count");
    }
    if (data.num_samples() == 0) {
        throw std::invalid_argument("empty dataset");
    }
    const Eigen::VectorXd margins = data.features * x;
    std::size_t correct = 0;
    for (Eigen::Index j = 0; j < margins.size(); ++j) {
        if (margins[j] * data.labels[j] > 0.0) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(margins.size());
}

} // namespace isrbcd
