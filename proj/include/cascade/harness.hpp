#pragma once

// Monte Carlo experiment runner: configuration, trials, aggregation and
// output files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cascade/environment.hpp"
#include "cascade/policies.hpp"

namespace cascade {

enum class EnvironmentKind { Synthetic, Hard, Csv };

struct EnvironmentSource {
    EnvironmentKind kind = EnvironmentKind::Synthetic;
    std::filesystem::path csv_path;
    double csv_scale = 1.0;
    std::size_t list_length = 2;  // K for csv and hard instances
    std::size_t hard_items = 10;
    std::size_t hard_blocks = 10;
    std::size_t hard_horizon = 25000;
};

struct ExperimentConfig {
    EnvironmentSource environment;
    std::uint64_t env_seed = 1;
    PolicyKind policy = PolicyKind::GlrtCascadeUcb;
    PolicyParams params;
    std::size_t trials = 100;
    std::uint64_t base_seed = 2021;
    std::filesystem::path output_dir = "results";
    std::size_t checkpoint_every = 100;
    bool full_trajectory = false;  // checkpoint every slot
    bool write_svg = false;
    std::size_t workers = 1;

    // Throws ValidationError on trials == 0, bad probabilities, etc.
    void validate() const;
};

/// A config file may list several policies; everything else is shared.
struct ConfigFile {
    ExperimentConfig base;
    std::vector<PolicyKind> policies;

    std::vector<ExperimentConfig> experiments() const;
};

/// Parses either a JSON object or flat `key = value` lines (# comments).
ConfigFile parse_config(std::istream& in, const std::string& source);
ConfigFile load_config(const std::filesystem::path& path);

EnvironmentSpec build_environment(const ExperimentConfig& config,
                                  std::vector<std::string>* warnings = nullptr);

struct RestartEvent {
    std::size_t slot = 0;
    std::size_t tau = 0;
    Restart kind = Restart::Detected;

    bool operator==(const RestartEvent&) const = default;
};

struct TrialResult {
    std::size_t trial_index = 0;
    std::uint64_t seed = 0;
    std::vector<double> checkpoint_regret;  // cumulative expected regret
    double final_regret = 0.0;
    std::vector<RestartEvent> events;

    bool operator==(const TrialResult&) const = default;
};

/// every, 2*every, ..., and T itself (every == 1 gives the full trajectory).
std::vector<std::size_t> checkpoint_slots(std::size_t horizon, std::size_t every);

/// One trial; deterministic in (config, spec, trial_index).
TrialResult run_trial(const ExperimentConfig& config, const EnvironmentSpec& spec,
                      std::size_t trial_index);

struct DetectionStats {
    std::size_t change_point = 0;
    std::size_t detected = 0;
    std::size_t missed = 0;
    double mean = 0.0;  // mean detection slot over detected trials
    double std = 0.0;

    bool operator==(const DetectionStats&) const = default;
};

struct ExperimentSummary {
    std::string version;
    std::string policy;     // display name
    std::string policy_id;  // config identifier
    std::size_t trials = 0;
    std::size_t horizon = 0;
    std::size_t items = 0;
    std::size_t list_length = 0;
    std::vector<std::size_t> change_points;

    double regret_mean = 0.0;
    double regret_std = 0.0;  // sample std across trials; 0 for a single trial
    std::vector<double> final_regrets;

    std::vector<std::size_t> checkpoints;
    std::vector<double> curve_mean;
    std::vector<double> curve_std;

    // One row per change-point, from Detected events only. A detection counts
    // for nu_i if it is the first one in (nu_i, nu_{i+1}].
    std::vector<DetectionStats> detections;
    std::size_t false_alarms = 0;        // all other Detected events
    std::size_t scheduled_restarts = 0;  // oracle restarts

    std::vector<std::string> warnings;
    nlohmann::json config;  // echo of the experiment configuration

    bool operator==(const ExperimentSummary&) const = default;
};

/// Deterministic reduction over trials in index order.
ExperimentSummary aggregate(const ExperimentConfig& config, const EnvironmentSpec& spec,
                            const std::vector<TrialResult>& trials);

/// Runs config.trials trials on config.workers threads and aggregates them.
/// The result does not depend on the worker count.
ExperimentSummary run_experiment(const ExperimentConfig& config, const EnvironmentSpec& spec);
ExperimentSummary run_experiment(const ExperimentConfig& config);

nlohmann::json config_to_json(const ExperimentConfig& config, const EnvironmentSpec& spec);

nlohmann::json summary_to_json(const ExperimentSummary& summary);
ExperimentSummary summary_from_json(const nlohmann::json& j);

/// Writes regret_curve.csv, detections.csv, summary.json and optionally
/// regret_curve.svg into `dir` (created if missing). Fails before touching
/// summary.json when the directory is not writable.
void emit_outputs(const ExperimentSummary& summary, const std::filesystem::path& dir,
                  bool write_svg = false);

/// One row per policy: policy,regret_mean,regret_std.
void write_comparison_csv(const std::vector<ExperimentSummary>& summaries,
                          const std::filesystem::path& path);

std::string version_string();

}  // namespace cascade
