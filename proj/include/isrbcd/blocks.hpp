#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace isrbcd {

/// Split of the coordinates 0..total_dim-1 into contiguous, non-empty blocks.
class BlockPartition {
public:
    explicit BlockPartition(std::vector<std::size_t> block_sizes);

    std::size_t total_dim() const { return total_dim_; }
    std::size_t num_blocks() const { return sizes_.size(); }
    std::size_t size(std::size_t block) const;
    std::size_t offset(std::size_t block) const;
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    const std::vector<std::size_t>& offsets() const { return offsets_; }

    /// Block containing coordinate `coord`.
    std::size_t block_of(std::size_t coord) const;

    bool operator==(const BlockPartition&) const = default;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::size_t total_dim_ = 0;
};

/// Balanced contiguous split; the first total_dim % num_blocks blocks get one
/// extra coordinate.
BlockPartition make_uniform_partition(std::size_t total_dim, std::size_t num_blocks);

/// Mutable view of the coordinates of `block` inside `x`.
Eigen::VectorBlock<Eigen::VectorXd> block_slice(Eigen::VectorXd& x, const BlockPartition& partition,
                                                std::size_t block);
Eigen::VectorBlock<const Eigen::VectorXd> block_slice(const Eigen::VectorXd& x,
                                                      const BlockPartition& partition,
                                                      std::size_t block);

enum class FlopCategory { gradient, prox, cost };

/// Symbolic operation counts, charged with the per-iteration cost model of the
/// linear-model solvers (gradient 2nd+n, prox d, cost nd+n).
struct FlopCounter {
    std::uint64_t gradient_flops = 0;
    std::uint64_t prox_flops = 0;
    std::uint64_t cost_flops = 0;

    void charge(FlopCategory category, std::uint64_t amount);
    std::uint64_t total() const { return gradient_flops + prox_flops + cost_flops; }

    bool operator==(const FlopCounter&) const = default;
};

namespace flops {
// n samples, width = d_i for a block step, d for a full step.
inline std::uint64_t gradient(std::size_t n, std::size_t width) { return 2 * n * width + n; }
inline std::uint64_t prox(std::size_t width) { return width; }
inline std::uint64_t cost(std::size_t n, std::size_t width) { return n * width + n; }
} // namespace flops

struct TraceRecord {
    std::size_t iteration = 0;
    std::uint64_t cumulative_flops = 0;
    double objective = 0.0;
    std::optional<double> violation;
    double wall_time_s = 0.0;

    bool operator==(const TraceRecord&) const = default;
};

/// CSV header `iteration,flops,objective,violation,wall_time_s`.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);
std::vector<TraceRecord> read_trace_csv(const std::string& path);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

} // namespace isrbcd
