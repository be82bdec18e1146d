#include "cascade/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Two-pass sample statistics, summed in the given order.
MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return out;
}

std::string_view environment_kind_name(EnvironmentKind kind) {
    switch (kind) {
        case EnvironmentKind::Synthetic:
            return "synthetic";
        case EnvironmentKind::Hard:
            return "hard";
        case EnvironmentKind::Csv:
            return "csv";
    }
    return "unknown";
}

}  // namespace

std::vector<std::size_t> checkpoint_slots(std::size_t horizon, std::size_t every) {
    if (every == 0) throw ValidationError("checkpoint spacing must be >= 1");
    std::vector<std::size_t> out;
    out.reserve(horizon / every + 1);
    for (std::size_t t = every; t <= horizon; t += every) out.push_back(t);
    if (out.empty() || out.back() != horizon) out.push_back(horizon);
    return out;
}

TrialResult run_trial(const ExperimentConfig& config, const EnvironmentSpec& spec,
                      std::size_t trial_index) {
    TrialResult result;
    result.trial_index = trial_index;
    result.seed = trial_seed(config.base_seed, trial_index);
    Rng rng(result.seed);

    const ResolvedParams params = resolve_params(config.params, spec);
    auto policy = make_policy(config.policy, params, spec);

    const auto checkpoints =
        checkpoint_slots(spec.horizon(), config.full_trajectory ? 1 : config.checkpoint_every);
    result.checkpoint_regret.reserve(checkpoints.size());
    std::size_t next_checkpoint = 0;

    const auto& segments = spec.segments();
    std::size_t seg = 0;
    double cumulative = 0.0;
    for (std::size_t t = 1; t <= spec.horizon(); ++t) {
        while (segments[seg].end < t) ++seg;
        const AttractionVector& w = segments[seg].w;

        const RecommendationList list = policy->select(t, rng);
        const ClickOutcome outcome = simulate_click(w, list, rng);

        double miss = 1.0;
        for (std::size_t item : list.items) miss *= 1.0 - w[item];
        // Reordering the optimal set can round the difference below zero.
        cumulative += std::max(0.0, spec.optimal_reward(seg) - (1.0 - miss));

        const Restart restart = policy->update(t, list, outcome.feedback);
        if (restart != Restart::None) {
            result.events.push_back({t, policy->last_restart(), restart});
        }
        if (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] == t) {
            result.checkpoint_regret.push_back(cumulative);
            ++next_checkpoint;
        }
    }
    result.final_regret = cumulative;
    return result;
}

ExperimentSummary aggregate(const ExperimentConfig& config, const EnvironmentSpec& spec,
                            const std::vector<TrialResult>& trials) {
    if (trials.empty()) throw ValidationError("cannot aggregate zero trials");
    ExperimentSummary s;
    s.version = version_string();
    s.policy = std::string(policy_display_name(config.policy));
    s.policy_id = std::string(policy_id(config.policy));
    s.trials = trials.size();
    s.horizon = spec.horizon();
    s.items = spec.items();
    s.list_length = spec.list_length();
    s.change_points = spec.change_points();
    s.config = config_to_json(config, spec);

    if (trials.size() == 1) {
        s.warnings.push_back("single trial: standard deviations reported as 0");
    }

    for (const auto& tr : trials) s.final_regrets.push_back(tr.final_regret);
    const MeanStd final_stats = mean_std(s.final_regrets);
    s.regret_mean = final_stats.mean;
    s.regret_std = final_stats.std;

    s.checkpoints =
        checkpoint_slots(spec.horizon(), config.full_trajectory ? 1 : config.checkpoint_every);
    std::vector<double> column(trials.size());
    for (std::size_t c = 0; c < s.checkpoints.size(); ++c) {
        for (std::size_t i = 0; i < trials.size(); ++i) {
            if (trials[i].checkpoint_regret.size() != s.checkpoints.size()) {
                throw ValidationError("trial " + std::to_string(i) + " has a different checkpoint grid");
            }
            column[i] = trials[i].checkpoint_regret[c];
        }
        const MeanStd cs = mean_std(column);
        s.curve_mean.push_back(cs.mean);
        s.curve_std.push_back(cs.std);
    }

    const std::size_t horizon = spec.horizon();
    std::vector<std::vector<double>> hits(s.change_points.size());
    std::size_t detected_total = 0;
    std::size_t attributed_total = 0;
    for (const auto& tr : trials) {
        for (const auto& ev : tr.events) {
            if (ev.kind == Restart::Detected) ++detected_total;
            if (ev.kind == Restart::Scheduled) ++s.scheduled_restarts;
        }
        for (std::size_t i = 0; i < s.change_points.size(); ++i) {
            const std::size_t lo = s.change_points[i];
            const std::size_t hi = i + 1 < s.change_points.size() ? s.change_points[i + 1] : horizon;
            for (const auto& ev : tr.events) {
                if (ev.kind == Restart::Detected && ev.slot > lo && ev.slot <= hi) {
                    hits[i].push_back(static_cast<double>(ev.slot));
                    ++attributed_total;
                    break;
                }
            }
        }
    }
    s.false_alarms = detected_total - attributed_total;
    for (std::size_t i = 0; i < s.change_points.size(); ++i) {
        DetectionStats d;
        d.change_point = s.change_points[i];
        d.detected = hits[i].size();
        d.missed = trials.size() - hits[i].size();
        const MeanStd ms = mean_std(hits[i]);
        d.mean = ms.mean;
        d.std = ms.std;
        s.detections.push_back(d);
    }
    return s;
}

ExperimentSummary run_experiment(const ExperimentConfig& config, const EnvironmentSpec& spec) {
    config.validate();
    resolve_params(config.params, spec);  // surface parameter errors before spawning threads

    std::vector<TrialResult> results(config.trials);
    const std::size_t workers = std::min(config.workers, config.trials);
    if (workers <= 1) {
        for (std::size_t i = 0; i < config.trials; ++i) results[i] = run_trial(config, spec, i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < config.trials; i = next++) {
                    try {
                        results[i] = run_trial(config, spec, i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = config.trials;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    return aggregate(config, spec, results);
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    std::vector<std::string> warnings;
    const EnvironmentSpec spec = build_environment(config, &warnings);
    ExperimentSummary s = run_experiment(config, spec);
    s.warnings.insert(s.warnings.begin(), warnings.begin(), warnings.end());
    return s;
}

nlohmann::json config_to_json(const ExperimentConfig& config, const EnvironmentSpec& spec) {
    const ResolvedParams p = resolve_params(config.params, spec);
    const auto& env = config.environment;
    nlohmann::json j;
    j["env"] = environment_kind_name(env.kind);
    j["env_seed"] = config.env_seed;
    if (env.kind == EnvironmentKind::Csv) {
        j["csv_path"] = env.csv_path.string();
        j["scale"] = env.csv_scale;
    }
    if (env.kind == EnvironmentKind::Hard) {
        j["hard_L"] = env.hard_items;
        j["hard_N"] = env.hard_blocks;
        j["hard_T"] = env.hard_horizon;
    }
    j["L"] = spec.items();
    j["K"] = spec.list_length();
    j["T"] = spec.horizon();
    j["N"] = spec.segment_count();
    j["policy"] = policy_id(config.policy);
    j["p"] = p.exploration;
    j["delta"] = p.delta;
    j["stride"] = p.stride;
    j["check_period"] = p.check_period;
    j["xi"] = p.xi;
    j["gamma"] = p.gamma;
    j["window"] = p.window;
    j["trials"] = config.trials;
    j["base_seed"] = config.base_seed;
    j["checkpoint_every"] = config.full_trajectory ? 1 : config.checkpoint_every;
    return j;
}

nlohmann::json summary_to_json(const ExperimentSummary& s) {
    nlohmann::json j;
    j["version"] = s.version;
    j["policy"] = s.policy;
    j["policy_id"] = s.policy_id;
    j["trials"] = s.trials;
    j["horizon"] = s.horizon;
    j["items"] = s.items;
    j["list_length"] = s.list_length;
    j["change_points"] = s.change_points;
    j["regret"] = {{"mean", s.regret_mean}, {"std", s.regret_std}, {"per_trial", s.final_regrets}};
    j["curve"] = {{"slots", s.checkpoints}, {"mean", s.curve_mean}, {"std", s.curve_std}};
    nlohmann::json det = nlohmann::json::array();
    for (const auto& d : s.detections) {
        det.push_back({{"change_point", d.change_point},
                       {"detected", d.detected},
                       {"missed", d.missed},
                       {"mean", d.mean},
                       {"std", d.std}});
    }
    j["detections"] = det;
    j["false_alarms"] = s.false_alarms;
    j["scheduled_restarts"] = s.scheduled_restarts;
    j["warnings"] = s.warnings;
    j["config"] = s.config;
    return j;
}

ExperimentSummary summary_from_json(const nlohmann::json& j) {
    ExperimentSummary s;
    try {
        j.at("version").get_to(s.version);
        j.at("policy").get_to(s.policy);
        j.at("policy_id").get_to(s.policy_id);
        j.at("trials").get_to(s.trials);
        j.at("horizon").get_to(s.horizon);
        j.at("items").get_to(s.items);
        j.at("list_length").get_to(s.list_length);
        j.at("change_points").get_to(s.change_points);
        const auto& regret = j.at("regret");
        regret.at("mean").get_to(s.regret_mean);
        regret.at("std").get_to(s.regret_std);
        regret.at("per_trial").get_to(s.final_regrets);
        const auto& curve = j.at("curve");
        curve.at("slots").get_to(s.checkpoints);
        curve.at("mean").get_to(s.curve_mean);
        curve.at("std").get_to(s.curve_std);
        for (const auto& d : j.at("detections")) {
            DetectionStats row;
            d.at("change_point").get_to(row.change_point);
            d.at("detected").get_to(row.detected);
            d.at("missed").get_to(row.missed);
            d.at("mean").get_to(row.mean);
            d.at("std").get_to(row.std);
            s.detections.push_back(row);
        }
        j.at("false_alarms").get_to(s.false_alarms);
        j.at("scheduled_restarts").get_to(s.scheduled_restarts);
        j.at("warnings").get_to(s.warnings);
        s.config = j.at("config");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("summary.json", 0, e.what());
    }
    return s;
}

std::string version_string() {
#ifdef CASCADE_VERSION
    return "cascade-bench " CASCADE_VERSION;
#else
    return "cascade-bench unknown";
#endif
}

}  // namespace cascade
