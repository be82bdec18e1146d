// bench: command-line front end for the cascading bandit simulator.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cascade/changepoint.hpp"
#include "cascade/environment.hpp"
#include "cascade/errors.hpp"
#include "cascade/harness.hpp"

namespace {

using namespace cascade;

std::size_t workers_override(std::size_t current) {
    const char* env = std::getenv("BENCH_WORKERS");
    if (env == nullptr || *env == '\0') return current;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || v == 0) {
        throw ValidationError(std::string("BENCH_WORKERS must be a positive integer, got '") + env + "'");
    }
    return static_cast<std::size_t>(v);
}

int cmd_run(const std::string& config_path, std::optional<std::size_t> workers,
            std::optional<std::string> output) {
    ConfigFile file = load_config(config_path);
    if (workers) file.base.workers = *workers;
    file.base.workers = workers_override(file.base.workers);
    if (output) file.base.output_dir = *output;
    file.base.validate();

    std::vector<std::string> env_warnings;
    const EnvironmentSpec spec = build_environment(file.base, &env_warnings);
    for (const auto& w : env_warnings) std::cerr << "warning: " << w << '\n';

    const auto experiments = file.experiments();
    const bool many = experiments.size() > 1;
    std::vector<ExperimentSummary> summaries;
    for (const auto& config : experiments) {
        ExperimentSummary s = run_experiment(config, spec);
        s.warnings.insert(s.warnings.begin(), env_warnings.begin(), env_warnings.end());
        const auto dir = many ? config.output_dir / s.policy_id : config.output_dir;
        emit_outputs(s, dir, config.write_svg);
        std::cout << std::left << std::setw(22) << s.policy << std::right << std::fixed
                  << std::setprecision(2) << std::setw(10) << s.regret_mean << " +- "
                  << std::setw(8) << s.regret_std << "   false alarms " << s.false_alarms << "   -> "
                  << dir.string() << '\n';
        summaries.push_back(std::move(s));
    }
    if (many) write_comparison_csv(summaries, file.base.output_dir / "comparison.csv");
    return 0;
}

std::vector<std::uint8_t> read_stream(std::istream& in, const std::string& source) {
    std::vector<std::uint8_t> out;
    std::string token;
    while (in >> token) {
        if (token == "0") {
            out.push_back(0);
        } else if (token == "1") {
            out.push_back(1);
        } else {
            throw ParseError(source, 0, "stream entry " + std::to_string(out.size() + 1) +
                                            " is '" + token + "', expected 0 or 1");
        }
    }
    return out;
}

int cmd_detect(const std::string& path, std::optional<double> delta, std::size_t stride,
               std::size_t check_period) {
    std::vector<std::uint8_t> stream;
    if (path.empty() || path == "-") {
        stream = read_stream(std::cin, "<stdin>");
    } else {
        std::ifstream in(path);
        if (!in) throw ParseError(path, 0, "cannot open stream file");
        stream = read_stream(in, path);
    }
    GlrtOptions options;
    options.delta = delta.value_or(stream.empty() ? 0.5 : 1.0 / static_cast<double>(stream.size()));
    options.stride = stride;
    options.check_period = check_period;
    const auto hit = first_detection(stream, options);
    if (hit) {
        std::cout << *hit << '\n';
    } else {
        std::cout << "none\n";
    }
    return 0;
}

int cmd_check_assumption(const std::string& config_path) {
    const ConfigFile file = load_config(config_path);
    std::vector<std::string> warnings;
    const EnvironmentSpec spec = build_environment(file.base, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    const ResolvedParams params = resolve_params(file.base.params, spec);
    const Assumption2Report report = check_assumption2(spec, params.exploration, params.delta);

    std::cout << std::setprecision(6);
    std::cout << "L = " << spec.items() << ", K = " << spec.list_length() << ", T = " << spec.horizon()
              << ", N = " << spec.segment_count() << '\n';
    std::cout << "p = " << params.exploration << ", delta = " << params.delta
              << ", beta(T, delta) = " << report.beta << '\n';
    std::cout << "segment  length  change_magnitude  window_d  required  ok\n";
    for (const auto& seg : report.segments) {
        const std::size_t i = seg.segment - 1;
        std::cout << std::setw(7) << seg.segment << std::setw(8) << seg.length << std::setw(18)
                  << report.change_magnitude[i] << std::setw(10) << report.window[i] << std::setw(10)
                  << seg.required << "  " << (seg.satisfied ? "yes" : "no") << '\n';
    }
    std::cout << "assumption satisfied: " << (report.satisfied ? "true" : "false") << '\n';
    return 0;
}

int cmd_make_env(const std::string& kind, std::uint64_t seed, const std::string& out,
                 std::size_t items, std::size_t list_length, std::size_t blocks,
                 std::size_t horizon) {
    EnvironmentSpec spec = kind == "synthetic"
                               ? make_synthetic(seed)
                               : make_hard_instance(items, list_length, blocks, horizon, seed);
    write_segments_csv(spec, std::filesystem::path(out));
    std::cout << "wrote " << spec.segment_count() << " segments (L = " << spec.items()
              << ", T = " << spec.horizon() << ") to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piecewise-stationary cascading bandit benchmark"};
    app.set_version_flag("--version", cascade::version_string());
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::size_t> workers;
    std::optional<std::string> output;
    auto* run = app.add_subcommand("run", "Run the experiments described by a config file");
    run->add_option("--config", config_path, "Config file (key = value lines or JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--workers", workers, "Worker threads (BENCH_WORKERS overrides)");
    run->add_option("--output", output, "Output directory (overrides output_dir)");

    std::string stream_path;
    std::optional<double> delta;
    std::size_t stride = 1;
    std::size_t check_period = 1;
    auto* detect = app.add_subcommand("detect", "First GLRT detection in a 0/1 stream");
    detect->add_option("file", stream_path, "Stream file; stdin when omitted or '-'");
    detect->add_option("--delta", delta, "Confidence level in (0,1); default 1/length");
    detect->add_option("--stride", stride, "Split stride")->check(CLI::PositiveNumber);
    detect->add_option("--check-period", check_period, "Test every n-th push")
        ->check(CLI::PositiveNumber);

    std::string assumption_config;
    auto* assumption =
        app.add_subcommand("check-assumption", "Print the segment-length report for a config");
    assumption->add_option("--config", assumption_config, "Config file")
        ->required()
        ->check(CLI::ExistingFile);

    std::string env_kind = "synthetic";
    std::uint64_t env_seed = 1;
    std::string env_out;
    std::size_t hard_items = 10, hard_k = 2, hard_blocks = 10, hard_horizon = 25000;
    auto* make_env = app.add_subcommand("make-env", "Write an environment as segment CSV");
    make_env->add_option("--kind", env_kind, "synthetic or hard")
        ->check(CLI::IsMember({"synthetic", "hard"}));
    make_env->add_option("--seed", env_seed, "Environment seed");
    make_env->add_option("--out", env_out, "Output CSV path")->required();
    make_env->add_option("--L", hard_items, "Hard instance: items");
    make_env->add_option("--K", hard_k, "Hard instance: list length");
    make_env->add_option("--N", hard_blocks, "Hard instance: blocks");
    make_env->add_option("--T", hard_horizon, "Hard instance: horizon");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, workers, output);
        if (*detect) return cmd_detect(stream_path, delta, stride, check_period);
        if (*assumption) return cmd_check_assumption(assumption_config);
        if (*make_env) {
            return cmd_make_env(env_kind, env_seed, env_out, hard_items, hard_k, hard_blocks,
                                hard_horizon);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
