#include "isrbcd/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isrbcd {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double ViolationVector::max() const {
    double m = 0.0;
    for (double z : approx) {
        m = std::max(m, z);
    }
    return m;
}

SamplingDistribution uniform_distribution(std::size_t num_blocks) {
    if (num_blocks == 0) {
        throw std::invalid_argument("need at least one block");
    }
    return {std::vector<double>(num_blocks, 1.0 / static_cast<double>(num_blocks)), 1.0};
}

SamplingDistribution importance_probabilities(const std::vector<double>& z, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0, 1]");
    }
    if (z.empty()) {
        throw std::invalid_argument("need at least one block");
    }
    double zmax = 0.0;
    double zsum = 0.0;
    for (double zi : z) {
        if (!(zi >= 0.0) || !std::isfinite(zi)) {
            throw std::invalid_argument("violations must be finite and non-negative");
        }
        zmax = std::max(zmax, zi);
        zsum += zi;
    }
    if (zmax == 0.0) {
        auto dist = uniform_distribution(z.size());
        dist.epsilon = epsilon;
        return dist;
    }
    const double m = static_cast<double>(z.size());
    const double denom = m * epsilon + (1.0 - epsilon) * (zsum / zmax);
    SamplingDistribution dist;
    dist.epsilon = epsilon;
    dist.probs.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        dist.probs[i] = (epsilon + (1.0 - epsilon) * (z[i] / zmax)) / denom;
    }
    return dist;
}

std::size_t sample_block(const SamplingDistribution& dist, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    const std::size_t last = dist.probs.size() - 1;
    for (std::size_t i = 0; i < last; ++i) {
        cumulative += dist.probs[i];
        if (u < cumulative) {
            return i;
        }
    }
    return last;
}

ViolationVector init_violations(const DesignProblem& problem, const BlockPartition& partition,
                                const Eigen::VectorXd& x0, const Eigen::VectorXd& margins, FlopCounter* flops) {
    const Eigen::VectorXd grad = full_gradient(*problem.loss, problem.features, margins, problem.labels, flops);
    ViolationVector z;
    z.exact_at_init = true;
    z.approx.resize(partition.num_blocks());
    for (std::size_t i = 0; i < partition.num_blocks(); ++i) {
        z.approx[i] = block_violation(*problem.penalty, block_slice(x0, partition, i),
                                      block_slice(grad, partition, i), problem.lambda);
    }
    return z;
}

void update_violation(ViolationVector& z, std::size_t block, const Eigen::Ref<const Eigen::VectorXd>& x_block_old,
                      const Eigen::Ref<const Eigen::VectorXd>& partial_grad, const DcPenalty& penalty,
                      double lambda) {
    if (block >= z.approx.size()) {
        throw std::invalid_argument("block index out of range");
    }
    z.approx[block] = block_violation(penalty, x_block_old, partial_grad, lambda);
}

std::size_t cyclic_next(std::size_t& counter, std::size_t num_blocks) {
    const std::size_t block = counter % num_blocks;
    ++counter;
    return block;
}

SamplerKind parse_sampler_kind(const std::string& text) {
    if (text == "uniform") return SamplerKind::uniform;
    if (text == "cyclic") return SamplerKind::cyclic;
    if (text == "importance") return SamplerKind::importance;
    throw std::invalid_argument("unknown sampler '" + text + "' (expected uniform, cyclic or importance)");
}

std::string to_string(SamplerKind kind) {
    switch (kind) {
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::cyclic: return "cyclic";
    case SamplerKind::importance: return "importance";
    }
    return "unknown";
}

UniformSelector::UniformSelector(std::size_t num_blocks, std::uint64_t seed)
    : dist_(uniform_distribution(num_blocks)), rng_(seed) {}

CyclicSelector::CyclicSelector(std::size_t num_blocks) : num_blocks_(num_blocks) {
    if (num_blocks == 0) {
        throw std::invalid_argument("need at least one block");
    }
}

ImportanceSelector::ImportanceSelector(std::size_t num_blocks, double epsilon, std::uint64_t seed)
    : epsilon_(epsilon), dist_(uniform_distribution(num_blocks)), rng_(seed) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in (0, 1]");
    }
    dist_.epsilon = epsilon;
}

void ImportanceSelector::initialize_violations(ViolationVector z) {
    if (z.approx.size() != dist_.probs.size()) {
        throw std::invalid_argument("violation vector length does not match block count");
    }
    z_ = std::move(z);
    dist_ = importance_probabilities(z_.approx, epsilon_);
}

void ImportanceSelector::observe_update(std::size_t block, double new_violation) {
    if (z_.approx.empty()) {
        return;
    }
    z_.approx.at(block) = new_violation;
    dist_ = importance_probabilities(z_.approx, epsilon_);
}

std::unique_ptr<BlockSelector> make_selector(SamplerKind kind, std::size_t num_blocks, std::uint64_t seed,
                                             double epsilon) {
    switch (kind) {
    case SamplerKind::uniform: return std::make_unique<UniformSelector>(num_blocks, seed);
    case SamplerKind::cyclic: return std::make_unique<CyclicSelector>(num_blocks);
    case SamplerKind::importance: return std::make_unique<ImportanceSelector>(num_blocks, epsilon, seed);
    }
    throw std::invalid_argument("unknown sampler kind");
}

} // namespace isrbcd
