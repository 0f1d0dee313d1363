#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isrbcd/errors.hpp"
#include "isrbcd/experiment.hpp"

using namespace isrbcd;
namespace fs = std::filesystem;

namespace {

const char* const small_manifest = R"(# small toy run
source = toy
n = 60
nt = 200
d = 40
t = 4
penalty = logsum
rho = 0.5
lambda = 2
replicates = 3
seed = 7
tolerance = 1e-3

[solver.gist]
type = gist

[solver.unif]
type = rbcd
sampler = uniform
blocks = 8

[solver.cyc]
type = rbcd
sampler = cyclic
blocks = 8

[solver.is]
type = rbcd
sampler = importance
blocks = 8
epsilon = 0.2
)";

ExperimentConfig small_config(const std::string& out) {
    std::istringstream in(small_manifest);
    auto c = parse_config(in);
    c.out_dir = out;
    return c;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("isrbcd_exp_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> csv_numbers(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    while (std::getline(ss, f, ',')) out.push_back(std::stod(f));
    return out;
}

} // namespace

TEST_CASE("manifest parsing") {
    const auto c = small_config("x");
    CHECK(c.toy.n_train == 60);
    CHECK(c.toy.dim == 40);
    CHECK(c.lambda == 2.0);
    CHECK(c.rho == 0.5);
    REQUIRE(c.solvers.size() == 4);
    CHECK(c.solvers[0].kind == SolverKind::gist);
    CHECK(c.solvers[3].sampler == SamplerKind::importance);
    CHECK(c.solvers[3].num_blocks == 8);
    CHECK_NOTHROW(c.validate());

    auto line_error = [](const std::string& text) -> std::string {
        std::istringstream in(text);
        try {
            parse_config(in);
        } catch (const std::invalid_argument& e) {
            return e.what();
        }
        return "";
    };
    CHECK(line_error("lambda = 1\nbogus = 2\n").rfind("line 2:", 0) == 0);
    CHECK(line_error("lambda = abc\n").rfind("line 1:", 0) == 0);
    CHECK(line_error("[solver.a]\nsampler = greedy\n").rfind("line 2:", 0) == 0);
    CHECK(line_error("[other]\n").rfind("line 1:", 0) == 0);
    CHECK(line_error("just words\n").rfind("line 1:", 0) == 0);

    auto o = c;
    apply_override(o, "lambda=3.5");
    apply_override(o, "solver.is.epsilon=0.5");
    apply_override(o, "solver.new.type=gist");
    CHECK(o.lambda == 3.5);
    CHECK(o.solvers[3].epsilon == 0.5);
    CHECK(o.solvers.size() == 5);
    CHECK_THROWS_AS(apply_override(o, "lambda"), std::invalid_argument);

    auto bad = c;
    bad.solvers.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.replicates = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.solvers[1].epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/dir/x.cfg"), io_error);
}

TEST_CASE("budgets and seeds") {
    CHECK(rbcd_budget(50, 100, 20000) == 5000);
    CHECK(rbcd_budget(1000, 100, 20000) == 20000);
    CHECK(rbcd_budget(0, 100, 20000) == 0);
    CHECK(rbcd_budget(std::size_t(1) << 62, 100, 20000) == 20000);
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("trace helpers") {
    std::vector<TraceRecord> t{{0, 10, 5.0, 2.0, 0}, {1, 20, 4.0, std::nullopt, 0}, {2, 30, 3.0, 0.5, 0},
                               {3, 40, 2.0, 0.2, 0}};
    CHECK(flops_to_reduction(t, 4.0) == std::uint64_t{30});
    CHECK(flops_to_reduction(t, 10.0) == std::uint64_t{40});
    CHECK_FALSE(flops_to_reduction(t, 100.0).has_value());
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(std::isinf(median({1.0, INFINITY, INFINITY})));
    CHECK_THROWS_AS(median({}), std::invalid_argument);
    const auto m = mean_trace({t, {{0, 20, 7.0, 4.0, 0}, {1, 30, 6.0, 1.0, 0}}});
    REQUIRE(m.size() == 2);
    CHECK(m[0].cumulative_flops == 15);
    CHECK(m[0].objective == 6.0);
    CHECK(*m[0].violation == 3.0);
    CHECK_FALSE(m[1].violation.has_value());
}

TEST_CASE("single replicate has zero spread") {
    const auto dir = scratch("single");
    ExperimentConfig c;
    c.toy.n_train = 20;
    c.toy.n_test = 50;
    c.toy.dim = 10;
    c.toy.n_relevant = 3;
    c.lambda = 1.0;
    c.replicates = 1;
    c.solvers.push_back(SolverSpec{"gist", SolverKind::gist});
    c.out_dir = dir.string();
    const auto res = run_experiment(c);
    REQUIRE(res.summary.size() == 1);
    CHECK(res.summary[0].count == 1);
    CHECK(res.summary[0].class_rate_std == 0.0);
    CHECK(res.summary[0].flops_std == 0.0);
    CHECK(res.summary[0].objective_std == 0.0);
    std::size_t traces = 0;
    for (const auto& e : fs::directory_iterator(dir)) traces += e.path().filename().string().rfind("trace_", 0) == 0;
    CHECK(traces == 1);
    fs::remove_all(dir);
}

TEST_CASE("runs are deterministic and summaries match the traces") {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    auto ca = small_config(a.string());
    auto cb = small_config(b.string());
    cb.jobs = 3;
    const auto ra = run_experiment(ca);
    run_experiment(cb);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
        ++files;
    }
    CHECK(files == 4 * 3 + 3);

    const auto rows = summarize_directory(a.string());
    std::ifstream in(a / "summary.csv");
    std::string line;
    std::getline(in, line);
    for (const auto& row : rows) {
        REQUIRE(std::getline(in, line));
        CHECK(line.rfind(row.solver + ",", 0) == 0);
        const auto v = csv_numbers(line);
        const double got[] = {row.class_rate_mean, row.class_rate_std, row.flops_mean, row.flops_std,
                              row.violation_mean, row.violation_std, row.objective_mean, row.objective_std};
        for (std::size_t k = 0; k < 8; ++k) {
            CHECK(std::abs(v[k] - got[k]) <= 1e-12 * std::max(1.0, std::abs(got[k])));
        }
    }

    // every RBCD run spends GIST iterations x m block steps unless it stops early
    for (std::size_t r = 0; r < 3; ++r) {
        const RunRecord* gist = nullptr;
        for (const auto& run : ra.runs)
            if (run.solver == "gist" && run.replicate == r) gist = &run;
        REQUIRE(gist != nullptr);
        for (const auto& run : ra.runs) {
            if (run.solver == "gist" || run.replicate != r) continue;
            const std::size_t budget = rbcd_budget(gist->iterations, 8, ca.rbcd_iteration_cap);
            if (run.termination == Termination::max_iterations) {
                CHECK(run.trace.back().iteration == budget);
                CHECK(run.iterations == budget);
            } else {
                CHECK(run.trace.back().iteration <= budget);
            }
        }
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("summarize_directory errors") {
    CHECK_THROWS_AS(summarize_directory("/nonexistent/dir"), io_error);
}

TEST_CASE("block-size sweep") {
    const auto dir = scratch("sweep");
    auto c = small_config(dir.string());
    c.replicates = 2;
    const auto sweep = block_size_sweep(c, {5, 10, 40});
    REQUIRE(sweep.size() == 3);
    CHECK(sweep[0].num_blocks == 8);
    CHECK(sweep[2].num_blocks == 1);
    for (const auto& s : sweep) {
        CHECK(fs::exists(dir / ("sweep_size" + std::to_string(s.block_size) + ".csv")));
        CHECK(fs::exists(dir / ("sweep_size" + std::to_string(s.block_size) + "_r1.csv")));
    }
    CHECK_THROWS_AS(block_size_sweep(c, {41}), std::invalid_argument);
    CHECK_THROWS_AS(block_size_sweep(c, {}), std::invalid_argument);

    // size = d is plain GIST
    auto g = c;
    g.solvers = {SolverSpec{"gist", SolverKind::gist}};
    const auto runs = run_experiment(g, false);
    for (std::size_t r = 0; r < 2; ++r) {
        if (runs.runs[r].iterations <= c.sweep_max_epochs) CHECK(sweep[2].replicate_traces[r] == runs.runs[r].trace);
    }
    fs::remove_all(dir);
}
