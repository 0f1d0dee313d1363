#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isrbcd/datasets.hpp"
#include "isrbcd/sampling.hpp"
#include "isrbcd/solver.hpp"

namespace isrbcd {

enum class SolverKind { gist, rbcd };

struct SolverSpec {
    std::string name;
    SolverKind kind = SolverKind::rbcd;
    SamplerKind sampler = SamplerKind::importance;
    std::size_t num_blocks = 100;
    double epsilon = 0.2;
};

enum class SourceKind { toy, libsvm };

/// Everything a `run` or `sweep-blocks` invocation needs. Mirrors the flat
/// key = value manifest format; see apply_setting for the key names.
struct ExperimentConfig {
    SourceKind source = SourceKind::toy;
    ToySpec toy;
    std::string dataset_path;
    double train_fraction = 0.8;
    bool standardize_data = true;

    std::string penalty = "logsum";
    double rho = 1.0;
    double lambda = 1.0;

    std::vector<SolverSpec> solvers;
    std::size_t replicates = 1;
    std::uint64_t seed = 0;

    double violation_tolerance = 1e-3;
    std::size_t gist_max_iterations = 1000;
    /// Upper bound on RBCD iterations (and the RBCD budget when no GIST solver runs).
    std::size_t rbcd_iteration_cap = 20000;
    /// Block-size sweep: passes over the data granted to every block size.
    std::size_t sweep_max_epochs = 200;
    /// Exact-violation trace points for RBCD every this many passes over the blocks.
    std::size_t check_every_epochs = 1;

    SolverConfig solver;
    std::size_t jobs = 1;
    std::string out_dir = "results";

    /// Throws std::invalid_argument describing the first problem found.
    void validate() const;
};

/// Sets one manifest key. `section` is empty for top-level keys or the solver
/// name for keys under `[solver.<name>]`. Throws std::invalid_argument on an
/// unknown key or unparsable value.
void apply_setting(ExperimentConfig& config, const std::string& section, const std::string& key,
                   const std::string& value);

/// `key=value` or `solver.<name>.key=value`.
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Names of the top-level manifest keys.
const std::vector<std::string>& top_level_keys();

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
    std::string solver;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
    double class_rate = 0.0;
    std::uint64_t flops = 0;
    double violation = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    Termination termination = Termination::max_iterations;
    std::string trace_file;
    std::vector<TraceRecord> trace;
};

struct SummaryRow {
    std::string solver;
    double class_rate_mean = 0.0, class_rate_std = 0.0;
    double flops_mean = 0.0, flops_std = 0.0;
    double violation_mean = 0.0, violation_std = 0.0;
    double objective_mean = 0.0, objective_std = 0.0;
    std::size_t count = 0;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;
    std::vector<SummaryRow> summary;
};

/// Replicate seed -> per-solver selector seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// GIST budget -> RBCD iteration budget with m blocks.
std::size_t rbcd_budget(std::size_t gist_iterations, std::size_t num_blocks, std::size_t cap);

/// Runs every solver on every replicate; when config.out_dir is non-empty,
/// writes trace_<solver>_r<k>.csv, runs.csv, summary.csv and summary.txt there.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

/// Aggregates per solver, in first-appearance order; sample standard deviation.
std::vector<SummaryRow> summarize_runs(const std::vector<RunRecord>& runs);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);

/// Re-reads runs.csv and the trace files it lists from `dir`, recomputing the
/// flops, violation and objective columns from the traces.
std::vector<SummaryRow> summarize_directory(const std::string& dir);

struct SweepSizeResult {
    std::size_t block_size = 0;
    std::size_t num_blocks = 0;
    std::vector<std::vector<TraceRecord>> replicate_traces;
    std::vector<TraceRecord> mean_trace;
};

/// Importance-sampling RBCD for each block size on the same replicates, each
/// granted min(GIST iterations, sweep_max_epochs) passes over the blocks.
std::vector<SweepSizeResult> block_size_sweep(const ExperimentConfig& config, const std::vector<std::size_t>& sizes,
                                              bool write_files = true);

/// Record-wise mean over traces truncated to the shortest one.
std::vector<TraceRecord> mean_trace(const std::vector<std::vector<TraceRecord>>& traces);

/// Cumulative flops at the first record whose violation is at most
/// (initial violation) / factor.
std::optional<std::uint64_t> flops_to_reduction(const std::vector<TraceRecord>& trace, double factor);

/// Median; +inf entries stand for "never reached".
double median(std::vector<double> values);

} // namespace isrbcd
