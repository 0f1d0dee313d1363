#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "isrbcd/blocks.hpp"
#include "isrbcd/problem.hpp"

namespace isrbcd {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

/// Approximate per-block optimality violations z~.
struct ViolationVector {
    std::vector<double> approx;
    bool exact_at_init = false;

    double max() const;
};

struct SamplingDistribution {
    std::vector<double> probs;
    double epsilon = 1.0;
};

SamplingDistribution uniform_distribution(std::size_t num_blocks);

/// p_i = (eps + (1-eps) z_i/|z|_inf) / (m eps + (1-eps) sum(z)/|z|_inf);
/// uniform when |z|_inf = 0. Throws std::invalid_argument unless eps in (0, 1]
/// and every z_i is finite and non-negative.
SamplingDistribution importance_probabilities(const std::vector<double>& z, double epsilon);

/// Inverse-CDF draw; consumes exactly one value from `rng`.
std::size_t sample_block(const SamplingDistribution& dist, Rng& rng);

/// Exact per-block violations at x0 from one full gradient (charged).
/// `margins` must equal A x0.
ViolationVector init_violations(const DesignProblem& problem, const BlockPartition& partition,
                                const Eigen::VectorXd& x0, const Eigen::VectorXd& margins,
                                FlopCounter* flops = nullptr);

/// z~_i <- block violation of (x_block_old, partial_grad); other entries untouched.
void update_violation(ViolationVector& z, std::size_t block, const Eigen::Ref<const Eigen::VectorXd>& x_block_old,
                      const Eigen::Ref<const Eigen::VectorXd>& partial_grad, const DcPenalty& penalty,
                      double lambda);

/// counter mod m, then advances counter.
std::size_t cyclic_next(std::size_t& counter, std::size_t num_blocks);

enum class SamplerKind { uniform, cyclic, importance };

SamplerKind parse_sampler_kind(const std::string& text);
std::string to_string(SamplerKind kind);

/// Block selection rule driving the solver.
class BlockSelector {
public:
    virtual ~BlockSelector() = default;

    virtual std::size_t num_blocks() const = 0;
    virtual std::size_t next_block() = 0;

    /// True when the selector needs z~ seeded at x0 and block violations
    /// reported after every partial gradient.
    virtual bool wants_violations() const { return false; }
    virtual void initialize_violations(ViolationVector) {}
    virtual void observe_update(std::size_t /*block*/, double /*new_violation*/) {}

    virtual const ViolationVector* violations() const { return nullptr; }
    virtual const SamplingDistribution* distribution() const { return nullptr; }
};

class UniformSelector final : public BlockSelector {
public:
    UniformSelector(std::size_t num_blocks, std::uint64_t seed);

    std::size_t num_blocks() const override { return dist_.probs.size(); }
    std::size_t next_block() override { return sample_block(dist_, rng_); }
    const SamplingDistribution* distribution() const override { return &dist_; }

private:
    SamplingDistribution dist_;
    Rng rng_;
};

class CyclicSelector final : public BlockSelector {
public:
    explicit CyclicSelector(std::size_t num_blocks);

    std::size_t num_blocks() const override { return num_blocks_; }
    std::size_t next_block() override { return cyclic_next(counter_, num_blocks_); }

private:
    std::size_t num_blocks_;
    std::size_t counter_ = 0;
};

/// Draws blocks in proportion to their approximate violation, mixed with a
/// uniform floor of epsilon / m.
class ImportanceSelector final : public BlockSelector {
public:
    ImportanceSelector(std::size_t num_blocks, double epsilon, std::uint64_t seed);

    std::size_t num_blocks() const override { return dist_.probs.size(); }
    std::size_t next_block() override { return sample_block(dist_, rng_); }

    // A single block is always drawn, so there is nothing to track.
    bool wants_violations() const override { return dist_.probs.size() > 1; }
    void initialize_violations(ViolationVector z) override;
    void observe_update(std::size_t block, double new_violation) override;

    const ViolationVector* violations() const override { return z_.approx.empty() ? nullptr : &z_; }
    const SamplingDistribution* distribution() const override { return &dist_; }

private:
    double epsilon_;
    ViolationVector z_;
    SamplingDistribution dist_;
    Rng rng_;
};

std::unique_ptr<BlockSelector> make_selector(SamplerKind kind, std::size_t num_blocks, std::uint64_t seed,
                                             double epsilon = 0.2);

} // namespace isrbcd
