#include "isrbcd/blocks.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "isrbcd/errors.hpp"

namespace isrbcd {

BlockPartition::BlockPartition(std::vector<std::size_t> block_sizes) : sizes_(std::move(block_sizes)) {
    if (sizes_.empty()) {
        throw std::invalid_argument("partition needs at least one block");
    }
    offsets_.reserve(sizes_.size());
    for (std::size_t s : sizes_) {
        if (s == 0) {
            throw std::invalid_argument("partition blocks must be non-empty");
        }
        offsets_.push_back(total_dim_);
        total_dim_ += s;
    }
}

std::size_t BlockPartition::size(std::size_t block) const {
    if (block >= sizes_.size()) {
        throw std::invalid_argument(fmt::format("block index {} out of range [0, {})", block, sizes_.size()));
    }
    return sizes_[block];
}

std::size_t BlockPartition::offset(std::size_t block) const {
    if (block >= sizes_.size()) {
        throw std::invalid_argument(fmt::format("block index {} out of range [0, {})", block, sizes_.size()));
    }
    return offsets_[block];
}

std::size_t BlockPartition::block_of(std::size_t coord) const {
    if (coord >= total_dim_) {
        throw std::invalid_argument("coordinate out of range");
    }
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), coord);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

BlockPartition make_uniform_partition(std::size_t total_dim, std::size_t num_blocks) {
    if (total_dim == 0 || num_blocks == 0) {
        throw std::invalid_argument("dimension and block count must be positive");
    }
    if (num_blocks > total_dim) {
        throw std::invalid_argument(
            fmt::format("cannot split {} coordinates into {} non-empty blocks", total_dim, num_blocks));
    }
    const std::size_t base = total_dim / num_blocks;
    const std::size_t extra = total_dim % num_blocks;
    std::vector<std::size_t> sizes(num_blocks, base);
    for (std::size_t i = 0; i < extra; ++i) {
        ++sizes[i];
    }
    return BlockPartition(std::move(sizes));
}

namespace {

void check_slice(Eigen::Index len, const BlockPartition& partition, std::size_t block) {
    if (static_cast<std::size_t>(len) != partition.total_dim()) {
        throw std::invalid_argument("vector length does not match partition dimension");
    }
    if (block >= partition.num_blocks()) {
        throw std::invalid_argument(
            fmt::format("block index {} out of range [0, {})", block, partition.num_blocks()));
    }
}

} // namespace

Eigen::VectorBlock<Eigen::VectorXd> block_slice(Eigen::VectorXd& x, const BlockPartition& partition,
                                                std::size_t block) {
    check_slice(x.size(), partition, block);
    return x.segment(static_cast<Eigen::Index>(partition.offset(block)),
                     static_cast<Eigen::Index>(partition.size(block)));
}

Eigen::VectorBlock<const Eigen::VectorXd> block_slice(const Eigen::VectorXd& x,
                                                      const BlockPartition& partition,
                                                      std::size_t block) {
    check_slice(x.size(), partition, block);
    return x.segment(static_cast<Eigen::Index>(partition.offset(block)),
                     static_cast<Eigen::Index>(partition.size(block)));
}

void FlopCounter::charge(FlopCategory category, std::uint64_t amount) {
    switch (category) {
    case FlopCategory::gradient: gradient_flops += amount; break;
    case FlopCategory::prox: prox_flops += amount; break;
    case FlopCategory::cost: cost_flops += amount; break;
    }
}

std::string format_real(double value) { return fmt::format("{}", value); }

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
    out << "iteration,flops,objective,violation,wall_time_s\n";
    for (const auto& r : trace) {
        out << r.iteration << ',' << r.cumulative_flops << ',' << format_real(r.objective) << ',';
        if (r.violation) {
            out << format_real(*r.violation);
        }
        out << ',' << format_real(r.wall_time_s) << '\n';
    }
}

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot open " + path + " for writing");
    }
    write_trace_csv(out, trace);
    if (!out) {
        throw io_error("failed writing " + path);
    }
}

namespace {

template <class T>
T parse_field(const std::string& text, std::size_t line) {
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        char* end = nullptr;
        value = std::strtod(text.c_str(), &end);
        if (text.empty() || end != text.c_str() + text.size()) {
            throw parse_error("bad number '" + text + "'", line);
        }
    } else {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw parse_error("bad integer '" + text + "'", line);
        }
    }
    return value;
}

} // namespace

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != "iteration,flops,objective,violation,wall_time_s") {
        throw parse_error("missing trace header", line_no);
    }
    std::vector<TraceRecord> trace;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (line.back() == ',') {
            fields.emplace_back();
        }
        if (fields.size() != 5) {
            throw parse_error("expected 5 fields", line_no);
        }
        TraceRecord r;
        r.iteration = parse_field<std::size_t>(fields[0], line_no);
        r.cumulative_flops = parse_field<std::uint64_t>(fields[1], line_no);
        r.objective = parse_field<double>(fields[2], line_no);
        if (!fields[3].empty()) {
            r.violation = parse_field<double>(fields[3], line_no);
        }
        r.wall_time_s = parse_field<double>(fields[4], line_no);
        trace.push_back(r);
    }
    return trace;
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open " + path);
    }
    return read_trace_csv(in);
}

} // namespace isrbcd
