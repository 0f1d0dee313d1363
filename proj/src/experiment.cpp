#include "isrbcd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "isrbcd/errors.hpp"

namespace isrbcd {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument(fmt::format("{}: expected a non-negative integer, got '{}'", key, text));
    }
    return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
    return static_cast<std::size_t>(parse_u64(key, text));
}

double parse_real(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
        throw std::invalid_argument(fmt::format("{}: expected a real number, got '{}'", key, text));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw std::invalid_argument(fmt::format("{}: expected a boolean, got '{}'", key, text));
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& top_level_setters() {
    static const std::map<std::string, Setter> setters = {
        {"source",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             if (v == "toy") c.source = SourceKind::toy;
             else if (v == "libsvm") c.source = SourceKind::libsvm;
             else throw std::invalid_argument(k + ": expected toy or libsvm");
         }},
        {"n", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.n_train = parse_size(k, v); }},
        {"nt", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.n_test = parse_size(k, v); }},
        {"d", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.dim = parse_size(k, v); }},
        {"t", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.n_relevant = parse_size(k, v); }},
        {"random_placement",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.random_placement = parse_bool(k, v); }},
        {"shared_covariance",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.toy.shared_covariance = parse_bool(k, v); }},
        {"dataset", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.dataset_path = v; }},
        {"train_fraction",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.train_fraction = parse_real(k, v); }},
        {"standardize",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.standardize_data = parse_bool(k, v); }},
        {"penalty",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             if (v != "logsum" && v != "l1") throw std::invalid_argument(k + ": expected logsum or l1");
             c.penalty = v;
         }},
        {"rho", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rho = parse_real(k, v); }},
        {"lambda", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.lambda = parse_real(k, v); }},
        {"replicates",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.replicates = parse_size(k, v); }},
        {"seed", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
        {"tolerance",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.violation_tolerance = parse_real(k, v); }},
        {"gist_max_iterations",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gist_max_iterations = parse_size(k, v); }},
        {"rbcd_iteration_cap",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.rbcd_iteration_cap = parse_size(k, v); }},
        {"sweep_max_epochs",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.sweep_max_epochs = parse_size(k, v); }},
        {"check_every_epochs",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.check_every_epochs = parse_size(k, v); }},
        {"sigma", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.sigma = parse_real(k, v); }},
        {"eta", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.eta = parse_real(k, v); }},
        {"theta_min",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.theta_min = parse_real(k, v); }},
        {"theta_max",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.theta_max = parse_real(k, v); }},
        {"theta_init",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.theta_init = parse_real(k, v); }},
        {"max_backtracks",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.max_backtracks = parse_size(k, v); }},
        {"decrease_norm_power",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.solver.decrease_norm_power = static_cast<int>(parse_size(k, v));
         }},
        {"cache_refresh_every",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) {
             c.solver.cache_refresh_every = parse_size(k, v);
         }},
        {"wall_time",
         [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.solver.record_wall_time = parse_bool(k, v); }},
        {"jobs", [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.jobs = parse_size(k, v); }},
        {"out", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
    };
    return setters;
}

SolverSpec& solver_named(ExperimentConfig& config, const std::string& name) {
    for (auto& s : config.solvers) {
        if (s.name == name) {
            return s;
        }
    }
    if (name.empty()) {
        throw std::invalid_argument("solver sections need a name: [solver.<name>]");
    }
    config.solvers.push_back(SolverSpec{name});
    return config.solvers.back();
}

} // namespace

const std::vector<std::string>& top_level_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, setter] : top_level_setters()) {
            k.push_back(name);
        }
        return k;
    }();
    return keys;
}

void apply_setting(ExperimentConfig& config, const std::string& section, const std::string& key,
                   const std::string& value) {
    if (section.empty()) {
        const auto& setters = top_level_setters();
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw std::invalid_argument("unknown key '" + key + "'");
        }
        it->second(config, key, value);
        return;
    }
    SolverSpec& s = solver_named(config, section);
    const std::string where = "solver." + section + "." + key;
    if (key == "type") {
        if (value == "gist") s.kind = SolverKind::gist;
        else if (value == "rbcd") s.kind = SolverKind::rbcd;
        else throw std::invalid_argument(where + ": expected gist or rbcd");
    } else if (key == "sampler") {
        s.sampler = parse_sampler_kind(value);
    } else if (key == "blocks") {
        s.num_blocks = parse_size(where, value);
    } else if (key == "epsilon") {
        s.epsilon = parse_real(where, value);
    } else {
        throw std::invalid_argument("unknown solver key '" + where + "'");
    }
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("override '" + assignment + "' is not key=value");
    }
    const std::string lhs = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (lhs.rfind("solver.", 0) == 0) {
        const auto dot = lhs.rfind('.');
        if (dot <= 7) {
            throw std::invalid_argument("solver override must read solver.<name>.<key>=value");
        }
        apply_setting(config, lhs.substr(7, dot - 7), lhs.substr(dot + 1), value);
    } else {
        apply_setting(config, "", lhs, value);
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) {
            raw.erase(hash);
        }
        const std::string line = trim(raw);
        if (line.empty()) {
            continue;
        }
        try {
            if (line.front() == '[') {
                if (line.back() != ']' || line.rfind("[solver.", 0) != 0) {
                    throw std::invalid_argument("expected a [solver.<name>] section header");
                }
                section = trim(line.substr(8, line.size() - 9));
                solver_named(config, section);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("expected key = value");
            }
            apply_setting(config, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open config " + path);
    }
    return parse_config(in);
}

void ExperimentConfig::validate() const {
    if (solvers.empty()) throw std::invalid_argument("config lists no solvers");
    if (replicates == 0) throw std::invalid_argument("replicates must be at least 1");
    if (source == SourceKind::libsvm && dataset_path.empty()) {
        throw std::invalid_argument("libsvm source needs a dataset path");
    }
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    if (penalty == "logsum" && !(rho > 0.0)) throw std::invalid_argument("rho must be positive");
    if (check_every_epochs == 0) throw std::invalid_argument("check_every_epochs must be positive");
    if (jobs == 0) throw std::invalid_argument("jobs must be positive");
    for (const auto& s : solvers) {
        if (s.kind == SolverKind::rbcd) {
            if (s.num_blocks == 0) throw std::invalid_argument("solver " + s.name + ": blocks must be positive");
            if (!(s.epsilon > 0.0 && s.epsilon <= 1.0)) {
                throw std::invalid_argument("solver " + s.name + ": epsilon must lie in (0, 1]");
            }
        }
        if (s.name.find_first_of("/\\, ") != std::string::npos) {
            throw std::invalid_argument("solver name '" + s.name + "' must not contain '/', '\\', ',' or spaces");
        }
    }
    solver.validate();
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t rbcd_budget(std::size_t gist_iterations, std::size_t num_blocks, std::size_t cap) {
    if (num_blocks != 0 && gist_iterations > cap / num_blocks) {
        return cap;
    }
    return std::min(gist_iterations * num_blocks, cap);
}

namespace {

std::shared_ptr<const DcPenalty> make_penalty(const ExperimentConfig& config) {
    if (config.penalty == "l1") {
        return std::make_shared<L1Penalty>();
    }
    return std::make_shared<LogSumPenalty>(config.rho);
}

struct ReplicateData {
    LabeledDataset train;
    LabeledDataset test;
};

ReplicateData replicate_data(const ExperimentConfig& config, const LabeledDataset* loaded, std::uint64_t seed) {
    ReplicateData out;
    if (config.source == SourceKind::toy) {
        ToySpec spec = config.toy;
        spec.seed = seed;
        ToyData toy = generate_toy(spec);
        out.train = std::move(toy.train);
        out.test = std::move(toy.test);
        // The toy protocol always standardizes on train statistics.
        std::tie(out.train, out.test) = standardize(out.train, out.test);
    } else {
        std::tie(out.train, out.test) = train_test_split(*loaded, config.train_fraction, seed);
        if (config.standardize_data) {
            std::tie(out.train, out.test) = standardize(out.train, out.test);
        }
    }
    return out;
}

DesignProblem make_problem(const ExperimentConfig& config, const LabeledDataset& train) {
    DesignProblem p;
    p.features = train.features;
    p.labels = train.labels;
    p.loss = std::make_shared<LogisticLoss>();
    p.penalty = make_penalty(config);
    p.lambda = config.lambda;
    return p;
}

std::string trace_name(const std::string& solver, std::size_t replicate) {
    return fmt::format("trace_{}_r{}.csv", solver, replicate);
}

// Runs fn(r) for r in [0, count) on up to `jobs` threads; rethrows the first failure.
template <class Fn>
void for_each_replicate(std::size_t count, std::size_t jobs, Fn fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t r = 0; r < count; ++r) {
            fn(r);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, count); ++w) {
        workers.emplace_back([&] {
            for (std::size_t r = next++; r < count; r = next++) {
                try {
                    fn(r);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::optional<LabeledDataset> load_source(const ExperimentConfig& config) {
    if (config.source == SourceKind::libsvm) {
        return load_libsvm(config.dataset_path);
    }
    return std::nullopt;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw io_error("cannot create output directory " + dir + ": " + ec.message());
    }
}

template <class Writer>
void write_file(const fs::path& path, Writer writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot open " + path.string() + " for writing");
    }
    writer(out);
    if (!out) {
        throw io_error("failed writing " + path.string());
    }
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
    config.validate();
    const std::optional<LabeledDataset> loaded = load_source(config);

    // GIST first: its iteration count sets the RBCD budgets.
    std::vector<std::size_t> order(config.solvers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_partition(order.begin(), order.end(),
                          [&](std::size_t s) { return config.solvers[s].kind == SolverKind::gist; });

    std::vector<std::vector<RunRecord>> per_replicate(config.replicates);
    for_each_replicate(config.replicates, config.jobs, [&](std::size_t r) {
        const std::uint64_t seed = config.seed + r;
        const ReplicateData data = replicate_data(config, loaded ? &*loaded : nullptr, seed);
        const DesignProblem problem = make_problem(config, data.train);
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.dim()));

        std::optional<std::size_t> gist_iterations;
        std::vector<RunRecord> runs(config.solvers.size());
        for (std::size_t s : order) {
            const SolverSpec& spec = config.solvers[s];
            SolverConfig sc = config.solver;
            sc.seed = derive_seed(seed, s);
            SolveResult res;
            if (spec.kind == SolverKind::gist) {
                sc.max_iterations = config.gist_max_iterations;
                sc.violation_tolerance = config.violation_tolerance;
                res = gist_solve(problem, sc, x0);
                if (!gist_iterations) {
                    gist_iterations = res.iterations;
                }
            } else {
                const std::size_t m = spec.num_blocks;
                const BlockPartition partition = make_uniform_partition(problem.dim(), m);
                auto selector = make_selector(spec.sampler, m, sc.seed, spec.epsilon);
                sc.max_iterations = gist_iterations ? rbcd_budget(*gist_iterations, m, config.rbcd_iteration_cap)
                                                    : config.rbcd_iteration_cap;
                sc.violation_tolerance = 0.0;
                sc.check_violation_every = m * config.check_every_epochs;
                res = rbcd_solve(problem, partition, *selector, sc, x0);
            }
            RunRecord& rec = runs[s];
            rec.solver = spec.name;
            rec.replicate = r;
            rec.seed = seed;
            rec.class_rate = classification_rate(data.test, res.final_iterate);
            rec.flops = res.flops.total();
            rec.violation = res.final_violation;
            rec.objective = res.final_objective;
            rec.iterations = res.iterations;
            rec.termination = res.termination;
            rec.trace_file = trace_name(spec.name, r);
            rec.trace = std::move(res.trace);
        }
        per_replicate[r] = std::move(runs);
    });

    ExperimentResult result;
    for (std::size_t s = 0; s < config.solvers.size(); ++s) {
        for (std::size_t r = 0; r < config.replicates; ++r) {
            result.runs.push_back(std::move(per_replicate[r][s]));
        }
    }
    result.summary = summarize_runs(result.runs);

    if (write_files && !config.out_dir.empty()) {
        ensure_dir(config.out_dir);
        const fs::path dir(config.out_dir);
        for (const auto& run : result.runs) {
            write_trace_csv((dir / run.trace_file).string(), run.trace);
        }
        write_file(dir / "runs.csv", [&](std::ostream& o) { write_runs_csv(o, result.runs); });
        write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, result.summary); });
        write_file(dir / "summary.txt", [&](std::ostream& o) { write_summary_table(o, result.summary); });
    }
    return result;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / (n - 1.0))};
}

} // namespace

std::vector<SummaryRow> summarize_runs(const std::vector<RunRecord>& runs) {
    std::vector<std::string> names;
    for (const auto& r : runs) {
        if (std::find(names.begin(), names.end(), r.solver) == names.end()) {
            names.push_back(r.solver);
        }
    }
    std::vector<SummaryRow> rows;
    for (const auto& name : names) {
        std::vector<double> rate, flops, viol, obj;
        for (const auto& r : runs) {
            if (r.solver == name) {
                rate.push_back(r.class_rate);
                flops.push_back(static_cast<double>(r.flops));
                viol.push_back(r.violation);
                obj.push_back(r.objective);
            }
        }
        SummaryRow row;
        row.solver = name;
        row.count = rate.size();
        std::tie(row.class_rate_mean, row.class_rate_std) = mean_std(rate);
        std::tie(row.flops_mean, row.flops_std) = mean_std(flops);
        std::tie(row.violation_mean, row.violation_std) = mean_std(viol);
        std::tie(row.objective_mean, row.objective_std) = mean_std(obj);
        rows.push_back(row);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "solver,class_rate_mean,class_rate_std,flops_mean,flops_std,violation_mean,violation_std,"
           "objective_mean,objective_std\n";
    for (const auto& r : rows) {
        out << r.solver << ',' << format_real(r.class_rate_mean) << ',' << format_real(r.class_rate_std) << ','
            << format_real(r.flops_mean) << ',' << format_real(r.flops_std) << ',' << format_real(r.violation_mean)
            << ',' << format_real(r.violation_std) << ',' << format_real(r.objective_mean) << ','
            << format_real(r.objective_std) << '\n';
    }
}

void write_summary_table(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << fmt::format("{:<16} {:>18} {:>24} {:>22} {:>24}\n", "solver", "class rate (%)", "flops x1e6",
                       "opt. condition", "objective");
    for (const auto& r : rows) {
        out << fmt::format("{:<16} {:>18} {:>24} {:>22} {:>24}\n", r.solver,
                           fmt::format("{:.2f} +- {:.2f}", 100 * r.class_rate_mean, 100 * r.class_rate_std),
                           fmt::format("{:.2f} +- {:.2f}", r.flops_mean / 1e6, r.flops_std / 1e6),
                           fmt::format("{:.4f} +- {:.4f}", r.violation_mean, r.violation_std),
                           fmt::format("{:.4f} +- {:.4f}", r.objective_mean, r.objective_std));
    }
}

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs) {
    out << "solver,replicate,seed,class_rate,flops,violation,objective,iterations,termination,trace_file\n";
    for (const auto& r : runs) {
        out << r.solver << ',' << r.replicate << ',' << r.seed << ',' << format_real(r.class_rate) << ','
            << r.flops << ',' << format_real(r.violation) << ',' << format_real(r.objective) << ','
            << r.iterations << ',' << to_string(r.termination) << ',' << r.trace_file << '\n';
    }
}

namespace {

Termination parse_termination(const std::string& text, std::size_t line) {
    for (Termination t : {Termination::max_iterations, Termination::violation_below_tolerance,
                          Termination::converged_zero_violations, Termination::backtrack_failure}) {
        if (to_string(t) == text) {
            return t;
        }
    }
    throw parse_error("unknown termination '" + text + "'", line);
}

} // namespace

std::vector<SummaryRow> summarize_directory(const std::string& dir) {
    const fs::path base(dir);
    std::ifstream in(base / "runs.csv");
    if (!in) {
        throw io_error("cannot open " + (base / "runs.csv").string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "solver,replicate,seed,class_rate,flops,violation,objective,iterations,termination,trace_file") {
        throw parse_error("unexpected runs.csv header", 1);
    }
    std::vector<RunRecord> runs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 10) {
            throw parse_error("expected 10 fields", line_no);
        }
        RunRecord r;
        try {
            r.solver = f[0];
            r.replicate = parse_size("replicate", f[1]);
            r.seed = parse_u64("seed", f[2]);
            r.class_rate = parse_real("class_rate", f[3]);
            r.iterations = parse_size("iterations", f[7]);
        } catch (const std::invalid_argument& e) {
            throw parse_error(e.what(), line_no);
        }
        r.termination = parse_termination(f[8], line_no);
        r.trace_file = f[9];
        r.trace = read_trace_csv((base / r.trace_file).string());
        if (r.trace.empty() || !r.trace.back().violation) {
            throw parse_error("trace " + r.trace_file + " lacks a final violation", line_no);
        }
        r.flops = r.trace.back().cumulative_flops;
        r.objective = r.trace.back().objective;
        r.violation = *r.trace.back().violation;
        runs.push_back(std::move(r));
    }
    return summarize_runs(runs);
}

std::vector<TraceRecord> mean_trace(const std::vector<std::vector<TraceRecord>>& traces) {
    if (traces.empty()) {
        return {};
    }
    std::size_t len = traces.front().size();
    for (const auto& t : traces) {
        len = std::min(len, t.size());
    }
    const double count = static_cast<double>(traces.size());
    std::vector<TraceRecord> out(len);
    for (std::size_t k = 0; k < len; ++k) {
        double flops = 0.0, obj = 0.0, viol = 0.0, wall = 0.0;
        bool all_viol = true;
        for (const auto& t : traces) {
            flops += static_cast<double>(t[k].cumulative_flops);
            obj += t[k].objective;
            wall += t[k].wall_time_s;
            if (t[k].violation) viol += *t[k].violation;
            else all_viol = false;
        }
        out[k].iteration = traces.front()[k].iteration;
        out[k].cumulative_flops = static_cast<std::uint64_t>(std::llround(flops / count));
        out[k].objective = obj / count;
        out[k].wall_time_s = wall / count;
        if (all_viol) out[k].violation = viol / count;
    }
    return out;
}

std::optional<std::uint64_t> flops_to_reduction(const std::vector<TraceRecord>& trace, double factor) {
    if (trace.empty() || !trace.front().violation) {
        return std::nullopt;
    }
    const double target = *trace.front().violation / factor;
    for (const auto& r : trace) {
        if (r.violation && *r.violation <= target) {
            return r.cumulative_flops;
        }
    }
    return std::nullopt;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median of an empty set");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[mid];
    }
    return 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<SweepSizeResult> block_size_sweep(const ExperimentConfig& config, const std::vector<std::size_t>& sizes,
                                              bool write_files) {
    if (sizes.empty()) {
        throw std::invalid_argument("sweep needs at least one block size");
    }
    if (config.replicates == 0) throw std::invalid_argument("replicates must be at least 1");
    config.solver.validate();
    const std::optional<LabeledDataset> loaded = load_source(config);
    const std::size_t dim = config.source == SourceKind::toy ? config.toy.dim : loaded->dim();
    double epsilon = 0.2;
    for (const auto& s : config.solvers) {
        if (s.kind == SolverKind::rbcd && s.sampler == SamplerKind::importance) {
            epsilon = s.epsilon;
            break;
        }
    }

    std::vector<SweepSizeResult> out(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        if (sizes[k] == 0 || sizes[k] > dim) {
            throw std::invalid_argument(fmt::format("block size {} outside [1, {}]", sizes[k], dim));
        }
        out[k].block_size = sizes[k];
        out[k].num_blocks = dim / sizes[k];
        out[k].replicate_traces.resize(config.replicates);
    }

    for_each_replicate(config.replicates, config.jobs, [&](std::size_t r) {
        const std::uint64_t seed = config.seed + r;
        const ReplicateData data = replicate_data(config, loaded ? &*loaded : nullptr, seed);
        const DesignProblem problem = make_problem(config, data.train);
        const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.dim()));

        SolverConfig gist_cfg = config.solver;
        gist_cfg.max_iterations = config.gist_max_iterations;
        gist_cfg.violation_tolerance = config.violation_tolerance;
        const std::size_t epochs = std::min(gist_solve(problem, gist_cfg, x0).iterations, config.sweep_max_epochs);

        for (std::size_t k = 0; k < sizes.size(); ++k) {
            const std::size_t m = out[k].num_blocks;
            const BlockPartition partition = make_uniform_partition(problem.dim(), m);
            SolverConfig sc = config.solver;
            sc.seed = derive_seed(seed, 1000 + k);
            sc.max_iterations = epochs * m;
            sc.violation_tolerance = 0.0;
            sc.check_violation_every = m * config.check_every_epochs;
            ImportanceSelector selector(m, epsilon, sc.seed);
            out[k].replicate_traces[r] = rbcd_solve(problem, partition, selector, sc, x0).trace;
        }
    });

    for (auto& s : out) {
        s.mean_trace = mean_trace(s.replicate_traces);
    }
    if (write_files && !config.out_dir.empty()) {
        ensure_dir(config.out_dir);
        const fs::path dir(config.out_dir);
        for (const auto& s : out) {
            write_trace_csv((dir / fmt::format("sweep_size{}.csv", s.block_size)).string(), s.mean_trace);
            for (std::size_t r = 0; r < s.replicate_traces.size(); ++r) {
                write_trace_csv((dir / fmt::format("sweep_size{}_r{}.csv", s.block_size, r)).string(),
                                s.replicate_traces[r]);
            }
        }
    }
    return out;
}

} // namespace isrbcd
