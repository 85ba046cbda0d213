// gravopt: gravitational search for benchmark functions and hyperparameter tuning.
//
// Exit codes: 0 success, 1 runtime/objective failure, 2 usage/config error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <gravopt/config.hpp>
#include <gravopt/gsa.hpp>
#include <gravopt/metrics.hpp>
#include <gravopt/output.hpp>

namespace fs = std::filesystem;
using namespace gravopt;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

// G scales step lengths in absolute units, so the small default boxes of the
// benchmark command want a smaller value than the tuning space does.
constexpr double benchmark_g0 = 10.0;

struct CommonOpts {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> parallelism;
    std::string out_dir = "runs";
    bool strict = false;
};

struct BenchmarkOpts {
    std::string fn = "sphere";
    std::size_t dims = 3;
    double lower = -5.0;
    double upper = 5.0;
    std::string config;
    std::optional<std::size_t> population;
    std::optional<std::size_t> iterations;
    std::optional<double> g0;
    std::optional<std::size_t> kbest_final;
    std::optional<std::string> schedule;
};

int execute(const std::string& command, RunConfig cfg, const std::shared_ptr<Objective>& objective,
            const CommonOpts& opts) {
    const std::uint64_t seed = resolve_seed(opts.seed, cfg.file_seed);
    cfg.gsa.seed = seed;
    if (opts.parallelism) cfg.parallelism = std::max(1u, *opts.parallelism);
    if (opts.strict) cfg.failure.strict = true;

    const fs::path dir = make_run_dir(opts.out_dir, seed);
    Manifest manifest;
    manifest.command = command;
    manifest.seed = seed;
    manifest.config = config_to_json(cfg, seed);
    manifest.started = utc_timestamp(std::chrono::system_clock::now());
    write_text(dir / "config.json", manifest.config.dump(2) + "\n");

    RunOptions options;
    options.parallelism = cfg.parallelism;
    options.failure = cfg.failure;
    try {
        const RunResult result = run(cfg.space, *objective, cfg.gsa, options);
        manifest.finished = utc_timestamp(std::chrono::system_clock::now());
        manifest.completed = true;
        persist_run(dir, result, cfg.space, manifest);
        std::cout << "run directory: " << dir.string() << "\n"
                  << "best fitness:  " << result.best_fitness << "\n"
                  << "best params:   " << params_to_json(result.best_params).dump() << "\n"
                  << "evaluations:   " << result.evaluations << " (cache hits " << result.cache_hits << ")\n";
        return exit_ok;
    } catch (const RunAborted& e) {
        manifest.finished = utc_timestamp(std::chrono::system_clock::now());
        manifest.error = e.what();
        persist_run(dir, e.partial(), cfg.space, manifest);
        std::cerr << "error: " << e.what() << "\npartial history written to " << dir.string() << "\n";
        return exit_runtime;
    }
}

int cmd_benchmark(const BenchmarkOpts& b, const CommonOpts& opts) {
    if (!find_benchmark(b.fn)) {
        std::cerr << "error: unknown function '" << b.fn << "' (choose sphere, rastrigin or rosenbrock)\n";
        return exit_usage;
    }
    RunConfig cfg;
    cfg.gsa.g0 = benchmark_g0;
    if (!b.config.empty()) cfg = load_config(b.config);
    cfg.objective.type = "benchmark";
    cfg.objective.function = b.fn;
    if (b.dims < 1) throw ConfigError("--dims must be >= 1");
    std::vector<Dimension> dims;
    for (std::size_t d = 0; d < b.dims; ++d) dims.push_back({"x" + std::to_string(d), DimensionKind::continuous, b.lower, b.upper});
    try {
        cfg.space = SearchSpace(std::move(dims));
    } catch (const SpaceError& e) {
        throw ConfigError(e.what());
    }
    if (b.population) cfg.gsa.population = *b.population;
    if (b.iterations) cfg.gsa.max_iterations = *b.iterations;
    if (b.g0) cfg.gsa.g0 = *b.g0;
    if (b.kbest_final) cfg.gsa.kbest_final = *b.kbest_final;
    if (b.schedule) cfg.gsa.g_schedule = detail::parse_schedule(*b.schedule);
    if (b.population && !b.kbest_final) cfg.gsa.kbest_final = std::min(cfg.gsa.kbest_final, cfg.gsa.population);
    try {
        cfg.gsa.validate();
    } catch (const InvalidConfig& e) {
        throw ConfigError(e.what());
    }
    return execute("benchmark", cfg, make_benchmark_objective(b.fn), opts);
}

int cmd_tune(const std::string& config_path, const CommonOpts& opts) {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (cfg.objective.type == "benchmark")
        throw ConfigError("tune expects objective.type 'toy-trainer' or 'external'; use the benchmark command");
    if (opts.parallelism) cfg.parallelism = std::max(1u, *opts.parallelism);
    return execute("tune", cfg, make_objective(cfg), opts);
}

int cmd_evaluate_metrics(const std::string& csv, const std::string& positive, const std::string& out_dir) {
    std::ifstream in(csv);
    if (!in) {
        std::cerr << "error: cannot read '" << csv << "'\n";
        return exit_usage;
    }
    metrics::ClassReport rep;
    try {
        const auto labels = metrics::read_label_csv(in);
        rep = metrics::report(metrics::confusion(labels.y_true, labels.y_pred, positive));
    } catch (const metrics::InputError& e) {
        std::cerr << "error: " << csv << ": " << e.what() << "\n";
        return exit_usage;
    }
    std::cout << metrics::format_table(rep);
    fs::create_directories(out_dir);
    const fs::path out = fs::path(out_dir) / "report.json";
    write_text(out, report_to_json(rep).dump(2) + "\n");
    std::cout << "report written to " << out.string() << "\n";
    return exit_ok;
}

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("--seed", opts.seed, "random seed (overrides GRAVOPT_SEED and the config file)");
    sub->add_option("--parallelism", opts.parallelism, "concurrent objective evaluations per iteration")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", opts.out_dir, "directory that receives the run directory")->capture_default_str();
    sub->add_flag("--strict-failures", opts.strict, "abort the run when an evaluation fails after its retries");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gravopt: gravitational search optimizer"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1);

    CommonOpts bench_common, tune_common;
    BenchmarkOpts bench;
    auto* benchmark = app.add_subcommand("benchmark", "optimize an analytic test function");
    benchmark->add_option("--fn", bench.fn, "sphere | rastrigin | rosenbrock")->capture_default_str();
    benchmark->add_option("--dims", bench.dims, "number of dimensions")->capture_default_str();
    benchmark->add_option("--lower", bench.lower, "lower bound of every dimension")->capture_default_str();
    benchmark->add_option("--upper", bench.upper, "upper bound of every dimension")->capture_default_str();
    benchmark->add_option("--config", bench.config, "TOML/JSON file supplying [gsa] settings");
    benchmark->add_option("--population", bench.population, "swarm size");
    benchmark->add_option("--iterations", bench.iterations, "iteration budget");
    benchmark->add_option("--g0", bench.g0, "initial gravitational constant (default 10 without --config)");
    benchmark->add_option("--kbest-final", bench.kbest_final, "attractor count at the last iteration");
    benchmark->add_option("--schedule", bench.schedule, "linear | power");
    add_common(benchmark, bench_common);

    std::string tune_config;
    auto* tune = app.add_subcommand("tune", "hyperparameter search driven by a run config");
    tune->add_option("--config", tune_config, "TOML or JSON run config (defaults apply when omitted)");
    add_common(tune, tune_common);

    std::string metrics_csv, positive = "positive", metrics_out = ".";
    auto* evalm = app.add_subcommand("evaluate-metrics", "classification report from a true/predicted label CSV");
    evalm->add_option("csv", metrics_csv, "CSV with header true_label,predicted_label")->required();
    evalm->add_option("--positive-label", positive, "label of the positive class")->capture_default_str();
    evalm->add_option("--out-dir", metrics_out, "directory for report.json")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*benchmark) return cmd_benchmark(bench, bench_common);
        if (*tune) return cmd_tune(tune_config, tune_common);
        if (*evalm) return cmd_evaluate_metrics(metrics_csv, positive, metrics_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}
