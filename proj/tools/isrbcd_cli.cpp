// Experiment runner: gen-toy, run, sweep-blocks, summarize.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "isrbcd/datasets.hpp"
#include "isrbcd/errors.hpp"
#include "isrbcd/experiment.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid_config = 1;
constexpr int exit_io = 2;

// Every manifest key doubles as a --key flag; flags win over the file.
struct ConfigOptions {
    std::string config_path;
    std::map<std::string, std::string> flags;
    std::vector<std::string> overrides;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config,-c", config_path, "Experiment manifest (key = value, [solver.<name>] sections)");
        for (const auto& key : isrbcd::top_level_keys()) {
            cmd.add_option("--" + key, flags[key], "Override manifest key '" + key + "'");
        }
        cmd.add_option("--set", overrides, "Override any key, e.g. solver.is-rbcd.epsilon=0.5")->take_all();
    }

    isrbcd::ExperimentConfig build(const CLI::App& cmd) const {
        isrbcd::ExperimentConfig config;
        if (!config_path.empty()) {
            config = isrbcd::load_config(config_path);
        }
        for (const auto& [key, value] : flags) {
            if (cmd.count("--" + key) > 0) {
                isrbcd::apply_setting(config, "", key, value);
            }
        }
        for (const auto& o : overrides) {
            isrbcd::apply_override(config, o);
        }
        return config;
    }
};

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(item, &pos);
        if (pos != item.size()) {
            throw std::invalid_argument("bad block size '" + item + "'");
        }
        sizes.push_back(static_cast<std::size_t>(v));
    }
    return sizes;
}

void print_sweep(const std::vector<isrbcd::SweepSizeResult>& sweep) {
    std::cout << fmt::format("{:>10} {:>8} {:>22} {:>18}\n", "block size", "blocks", "median flops to 10x",
                             "final violation");
    for (const auto& s : sweep) {
        std::vector<double> reach;
        for (const auto& t : s.replicate_traces) {
            const auto f = isrbcd::flops_to_reduction(t, 10.0);
            reach.push_back(f ? static_cast<double>(*f) : std::numeric_limits<double>::infinity());
        }
        const double final_viol =
            s.mean_trace.empty() || !s.mean_trace.back().violation ? 0.0 : *s.mean_trace.back().violation;
        std::cout << fmt::format("{:>10} {:>8} {:>22.4g} {:>18.4g}\n", s.block_size, s.num_blocks,
                                 isrbcd::median(reach), final_viol);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized block-coordinate proximal gradient experiments"};
    app.require_subcommand(1);

    ConfigOptions run_opts;
    auto* run = app.add_subcommand("run", "Run every configured solver on every replicate");
    run_opts.attach(*run);

    ConfigOptions sweep_opts;
    std::string sizes_text = "10,20,50,100";
    auto* sweep = app.add_subcommand("sweep-blocks", "Importance-sampling RBCD across block sizes");
    sweep_opts.attach(*sweep);
    sweep->add_option("--sizes", sizes_text, "Comma-separated block sizes d_i");

    isrbcd::ToySpec toy;
    std::string toy_out = "toy";
    bool raw = false;
    auto* gen = app.add_subcommand("gen-toy", "Write a toy train/test pair in LIBSVM format");
    gen->add_option("--n", toy.n_train, "Training samples");
    gen->add_option("--d", toy.dim, "Dimension");
    gen->add_option("--t", toy.n_relevant, "Relevant coordinates");
    gen->add_option("--nt", toy.n_test, "Test samples");
    gen->add_option("--seed", toy.seed, "Seed");
    gen->add_option("--out", toy_out, "Output directory");
    gen->add_flag("--raw", raw, "Skip standardization");

    std::string summary_dir;
    auto* summarize = app.add_subcommand("summarize", "Re-aggregate runs.csv and trace files of a run directory");
    summarize->add_option("--dir", summary_dir, "Run output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_invalid_config;
    }

    try {
        if (*run) {
            const isrbcd::ExperimentConfig config = run_opts.build(*run);
            const auto result = isrbcd::run_experiment(config);
            isrbcd::write_summary_table(std::cout, result.summary);
            for (const auto& r : result.runs) {
                if (r.termination == isrbcd::Termination::backtrack_failure) {
                    std::cerr << fmt::format("warning: {} replicate {} stopped on backtracking failure\n", r.solver,
                                             r.replicate);
                }
            }
        } else if (*sweep) {
            const isrbcd::ExperimentConfig config = sweep_opts.build(*sweep);
            print_sweep(isrbcd::block_size_sweep(config, parse_sizes(sizes_text)));
        } else if (*gen) {
            auto data = isrbcd::generate_toy(toy);
            if (!raw) {
                std::tie(data.train, data.test) = isrbcd::standardize(data.train, data.test);
            }
            std::error_code ec;
            std::filesystem::create_directories(toy_out, ec);
            if (ec) {
                throw isrbcd::io_error("cannot create " + toy_out + ": " + ec.message());
            }
            isrbcd::write_libsvm((std::filesystem::path(toy_out) / "train.svm").string(), data.train);
            isrbcd::write_libsvm((std::filesystem::path(toy_out) / "test.svm").string(), data.test);
        } else if (*summarize) {
            const auto rows = isrbcd::summarize_directory(summary_dir);
            const std::filesystem::path dir(summary_dir);
            std::ofstream csv(dir / "summary.csv", std::ios::binary);
            if (!csv) {
                throw isrbcd::io_error("cannot write summary.csv in " + summary_dir);
            }
            isrbcd::write_summary_csv(csv, rows);
            isrbcd::write_summary_table(std::cout, rows);
        }
    } catch (const isrbcd::io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid_config;
    }
    return exit_ok;
}
