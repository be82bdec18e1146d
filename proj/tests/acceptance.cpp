// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cascade/changepoint.hpp"
#include "cascade/core_math.hpp"
#include "cascade/environment.hpp"
#include "cascade/harness.hpp"
#include "cascade/policies.hpp"
#include "cascade/rng.hpp"

using namespace cascade;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return out;
}

long double kl_ref(long double x, long double y) {
    long double out = 0;
    if (x > 0) out += x * std::log(x / y);
    if (x < 1) out += (1 - x) * std::log((1 - x) / (1 - y));
    return out;
}

// Supremum over every split, each evaluated from scratch.
double glr_brute_force(const std::vector<std::uint8_t>& xs) {
    const std::size_t n = xs.size();
    if (n < 2) return 0.0;
    long double total = 0;
    for (auto x : xs) total += x;
    const long double mu = total / n;
    if (mu == 0 || mu == 1) return 0.0;
    long double best = 0;
    for (std::size_t s = 1; s < n; ++s) {
        long double left = 0, right = 0;
        for (std::size_t i = 0; i < s; ++i) left += xs[i];
        for (std::size_t i = s; i < n; ++i) right += xs[i];
        best = std::max(best, s * kl_ref(left / s, mu) + (n - s) * kl_ref(right / (n - s), mu));
    }
    return static_cast<double>(best);
}

// Feeds Bernoulli draws into a fresh detector until it fires or `limit`
// draws have been made; `p_at(i)` is the mean of the i-th draw (1-based).
std::optional<std::size_t> run_stream(Rng& rng, const GlrtDetector& detector, std::size_t limit,
                                      const std::function<double(std::size_t)>& p_at) {
    ObservationBuffer buffer;
    for (std::size_t i = 1; i <= limit; ++i) {
        buffer.push(rng.bernoulli(p_at(i)));
        if (detector.check(buffer)) return i;
    }
    return std::nullopt;
}

Outcome glr_oracle_equivalence() {
    const auto start = Clock::now();
    Rng rng(20210001);
    double worst = 0.0;
    for (int b = 0; b < 200; ++b) {
        const std::size_t n = 1 + rng.below(500);
        const double p = rng.uniform();
        std::vector<std::uint8_t> xs(n);
        ObservationBuffer buffer;
        for (auto& x : xs) {
            x = rng.bernoulli(p) ? 1 : 0;
            buffer.push(x != 0);
        }
        worst = std::max(worst, std::abs(glr_statistic(buffer, 1) - glr_brute_force(xs)));
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-12 && elapsed < 5.0,
            fmt("max |diff| = %.3g over 200 buffers (tol 1e-12), %.2f s (limit 5 s)", worst, elapsed)};
}

Outcome example_stream_detection() {
    const auto start = Clock::now();
    Rng rng(20210002);
    const GlrtDetector detector({1.0 / 4000, 1, 1});
    std::vector<double> hits;
    std::size_t missing = 0;
    for (int s = 0; s < 100; ++s) {
        const auto hit = run_stream(rng, detector, 20000, [](std::size_t i) { return i <= 2000 ? 0.2 : 0.8; });
        if (hit) {
            hits.push_back(static_cast<double>(*hit));
        } else {
            ++missing;
        }
    }
    const auto ms = mean_std(hits);
    const double elapsed = seconds_since(start);
    const bool pass = missing == 0 && ms.mean >= 2010 && ms.mean <= 2040 && ms.std <= 20 && elapsed < 60;
    return {pass, fmt("mean %.2f (want [2010, 2040]), std %.2f (want <= 20), %zu without detection, "
                      "%.1f s (limit 60 s)",
                      ms.mean, ms.std, missing, elapsed)};
}

Outcome false_alarm_control() {
    const auto start = Clock::now();
    Rng rng(20210003);
    const GlrtDetector detector({1.0 / 10000, 1, 1});
    std::size_t alarms = 0;
    for (int s = 0; s < 200; ++s) {
        if (run_stream(rng, detector, 10000, [](std::size_t) { return 0.5; })) ++alarms;
    }
    const double fraction = static_cast<double>(alarms) / 200.0;
    return {fraction <= 0.05, fmt("%zu of 200 streams alarmed, fraction %.3f (want <= 0.05), %.1f s",
                                  alarms, fraction, seconds_since(start))};
}

struct SyntheticRun {
    std::map<PolicyKind, ExperimentSummary> summaries;
    double seconds = 0.0;
};

SyntheticRun run_synthetic() {
    SyntheticRun out;
    const auto start = Clock::now();
    ExperimentConfig base;
    base.trials = 100;
    base.workers = std::max(1u, std::thread::hardware_concurrency());
    const auto spec = make_synthetic(base.env_seed);
    for (PolicyKind kind : kAllPolicies) {
        ExperimentConfig c = base;
        c.policy = kind;
        out.summaries.emplace(kind, run_experiment(c, spec));
    }
    out.seconds = seconds_since(start);
    return out;
}

Outcome synthetic_regret_table(const SyntheticRun& run) {
    auto mean = [&](PolicyKind k) { return run.summaries.at(k).regret_mean; };
    const double oracle_kl = mean(PolicyKind::OracleCascadeKlUcb);
    const double oracle_ucb = mean(PolicyKind::OracleCascadeUcb1);
    const double glrt_kl = mean(PolicyKind::GlrtCascadeKlUcb);
    const double glrt_ucb = mean(PolicyKind::GlrtCascadeUcb);
    const double sw = mean(PolicyKind::CascadeSwUcb);
    const double ucb = mean(PolicyKind::CascadeUcb1);
    const double kl = mean(PolicyKind::CascadeKlUcb);

    std::vector<std::string> failed;
    if (!(oracle_kl < glrt_kl)) failed.push_back("Oracle-KL < GLRT-KL");
    if (!(glrt_kl < glrt_ucb)) failed.push_back("GLRT-KL < GLRT-UCB");
    if (!(glrt_ucb < sw)) failed.push_back("GLRT-UCB < SWUCB");
    if (!(sw < ucb && sw < kl)) failed.push_back("SWUCB < {UCB1, KL-UCB}");
    if (!(glrt_ucb <= 1.25 * oracle_ucb)) failed.push_back("GLRT-UCB within 25% of oracle");
    if (!(glrt_kl <= 1.25 * oracle_kl)) failed.push_back("GLRT-KL within 25% of oracle");
    if (!(glrt_ucb >= 350 && glrt_ucb <= 750)) failed.push_back("GLRT-UCB in [350, 750]");
    if (!(glrt_kl >= 280 && glrt_kl <= 650)) failed.push_back("GLRT-KL in [280, 650]");
    if (!(run.seconds < 600)) failed.push_back("runtime < 600 s");

    std::ostringstream detail;
    detail << std::fixed;
    detail.precision(2);
    for (PolicyKind kind : kAllPolicies) {
        const auto& s = run.summaries.at(kind);
        detail << "\n       " << s.policy << ": " << s.regret_mean << " +- " << s.regret_std;
    }
    detail << "\n       runtime " << run.seconds << " s (limit 600 s)";
    if (!failed.empty()) {
        detail << "\n       failed:";
        for (const auto& f : failed) detail << " [" << f << "]";
    }
    return {failed.empty(), detail.str()};
}

std::string delay_rows(const ExperimentSummary& s) {
    std::ostringstream out;
    out << std::fixed;
    out.precision(2);
    for (const auto& d : s.detections) {
        out << "\n       " << s.policy << " nu=" << d.change_point << ": ";
        if (d.detected > 0) {
            out << "mean " << d.mean << " (delay " << d.mean - static_cast<double>(d.change_point)
                << ") +- " << d.std;
        } else {
            out << "never detected";
        }
        out << ", missed " << d.missed << "/" << s.trials;
    }
    return out.str();
}

Outcome synthetic_detection_delays(const SyntheticRun& run) {
    const auto& s = run.summaries.at(PolicyKind::GlrtCascadeUcb);
    std::size_t missed = 0;
    std::size_t outside = 0;
    std::size_t slow = 0;
    for (const auto& d : s.detections) {
        missed += d.missed;
        const double nu = static_cast<double>(d.change_point);
        if (d.detected == 0 || !(d.mean > nu && d.mean <= nu + 300)) ++outside;
        // Every change here lifts or drops three items by at least 0.4.
        if (d.detected == 0 || d.mean - nu > 150) ++slow;
    }
    std::string detail = fmt("GLRT-CascadeUCB: %zu change-points outside (nu, nu+300], %zu with mean "
                             "delay > 150, %zu missed trial detections (want 0, 0, 0)",
                             outside, slow, missed);
    detail += delay_rows(s);
    detail += "\n       (not gated)";
    detail += delay_rows(run.summaries.at(PolicyKind::GlrtCascadeKlUcb));
    return {missed == 0 && outside == 0 && slow == 0, detail};
}

Outcome klucb_root_accuracy() {
    Rng rng(20210006);
    const double below_one = std::nextafter(1.0, 0.0);
    double worst = 0.0;
    std::size_t ones = 0, wrong_ones = 0;
    // Reachable states: n pulls within the elapsed slots, mean = k / n.
    for (int i = 0; i < 1000; ++i) {
        const auto elapsed = static_cast<std::uint64_t>(std::exp(rng.uniform(0.0, std::log(1e5))));
        const auto n = std::clamp<std::uint64_t>(
            static_cast<std::uint64_t>(std::exp(rng.uniform(0.0, std::log(static_cast<double>(elapsed))))),
            1, elapsed);
        const double mean = static_cast<double>(rng.below(n + 1)) / static_cast<double>(n);
        const double q = klucb_index(mean, n, elapsed);
        const double nn = static_cast<double>(n);
        const double g = klucb_exploration(elapsed);
        // KL(1, q) = -ln q tends to 0 as q -> 1-.
        const double kl_at_one = mean == 1.0 ? 0.0 : kl_bernoulli(mean, below_one);
        const bool should_be_one = nn * kl_at_one <= g;
        if ((q == 1.0) != should_be_one) ++wrong_ones;
        if (q == 1.0) {
            ++ones;
        } else if (q < 1.0) {
            worst = std::max(worst, std::abs(nn * kl_bernoulli(mean, q) - g));
        }
    }
    return {worst <= 1e-6 && wrong_ones == 0,
            fmt("max |n KL - g| = %.3g (tol 1e-6), %zu indices equal 1, %zu disagree with the "
                "n KL(mean, 1-) <= g rule",
                worst, ones, wrong_ones)};
}

Outcome hard_instance_generator() {
    const std::size_t L = 10, N = 10, T = 25000;
    const double closed = (L - 1.0) / (4.0 * std::sqrt(static_cast<double>(T) * L * std::log(4.0 / 3.0)));
    const double eps = hard_instance_epsilon(L, T);
    const std::size_t block = (T + N - 1) / N;
    std::size_t repeats = 0, bad_blocks = 0, bad_values = 0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        const auto spec = make_hard_instance(L, 2, N, T, seed);
        if (spec.segment_count() != N) ++bad_blocks;
        std::optional<std::size_t> previous;
        for (std::size_t i = 0; i < spec.segment_count(); ++i) {
            const auto& seg = spec.segments()[i];
            const std::size_t want = i + 1 < N ? block : T - (N - 1) * block;
            if (seg.start != i * block + 1 || seg.length() != want) ++bad_blocks;
            std::size_t best = L, count = 0;
            for (std::size_t l = 0; l < L; ++l) {
                if (seg.w[l] != 0.5) {
                    best = l;
                    ++count;
                    if (seg.w[l] != 0.5 + eps) ++bad_values;
                }
            }
            if (count != 1) ++bad_values;
            if (previous && *previous == best) ++repeats;
            previous = best;
        }
    }
    const double diff = std::abs(eps - closed);
    return {diff <= 1e-12 && repeats == 0 && bad_blocks == 0 && bad_values == 0,
            fmt("eps = %.15f, |eps - closed form| = %.3g (tol 1e-12); over 1000 instances: %zu "
                "consecutive repeats, %zu malformed blocks, %zu malformed vectors",
                eps, diff, repeats, bad_blocks, bad_values)};
}

Outcome segment_length_checker() {
    const auto synthetic = make_synthetic(1);
    const auto params = resolve_params({}, synthetic);
    const auto syn = check_assumption2(synthetic, params.exploration, params.delta);

    // Two segments long enough for their own windows, sized with the
    // window formula evaluated here.
    const double p = 1.0, delta = 0.05;
    const AttractionVector w0 = {0.9, 0.1}, w1 = {0.1, 0.9};
    std::size_t length = 100;
    for (;;) {
        const double beta = threshold_beta(2 * length, delta);
        auto window = [&](double gap) { return std::ceil(4.0 * 2 * beta / (p * gap * gap) + 2 / p); };
        const double need = 2.0 * std::max(window(0.9), window(0.8));
        if (static_cast<double>(length) >= need) break;
        length = static_cast<std::size_t>(need) + 1;
    }
    const EnvironmentSpec pair(2, 1, {{1, length, w0}, {length + 1, 2 * length, w1}});
    const auto ok = check_assumption2(pair, p, delta);
    return {!syn.satisfied && ok.satisfied,
            fmt("synthetic: %s (want false); two segments of %zu slots: %s (want true)",
                syn.satisfied ? "true" : "false", length, ok.satisfied ? "true" : "false")};
}

Outcome worker_determinism() {
    const auto start = Clock::now();
    ExperimentConfig config;
    config.policy = PolicyKind::GlrtCascadeKlUcb;
    config.trials = 16;
    const auto spec = make_synthetic(config.env_seed);
    const fs::path root = fs::temp_directory_path() / "cascade_acceptance_workers";
    fs::remove_all(root);
    std::vector<std::string> bytes;
    for (std::size_t workers : {1, 4}) {
        config.workers = workers;
        const auto dir = root / std::to_string(workers);
        emit_outputs(run_experiment(config, spec), dir);
        std::ifstream in(dir / "summary.json", std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        bytes.push_back(s.str());
    }
    const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
    fs::remove_all(root);
    return {same, fmt("summary.json %s for workers 1 and 4 (%zu bytes), %.1f s",
                      same ? "identical" : "differs", bytes[0].size(), seconds_since(start))};
}

}  // namespace

int main() {
    std::cout << "acceptance suite (" << version_string() << ")\n";
    int failures = 0;
    auto report = [&](int id, const std::string& title, const Outcome& o) {
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ". " << title << ": " << o.detail << '\n'
                  << std::flush;
        if (!o.pass) ++failures;
    };

    report(1, "GLR statistic equals brute force", glr_oracle_equivalence());
    report(2, "shift stream detection time", example_stream_detection());
    report(3, "false-alarm control", false_alarm_control());
    const SyntheticRun synthetic = run_synthetic();
    report(4, "synthetic regret table", synthetic_regret_table(synthetic));
    report(5, "synthetic detection delays", synthetic_detection_delays(synthetic));
    report(6, "KL-UCB root accuracy", klucb_root_accuracy());
    report(7, "hard-instance generator", hard_instance_generator());
    report(8, "segment-length condition checker", segment_length_checker());
    report(9, "worker-count determinism", worker_determinism());

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
              << '\n';
    return failures == 0 ? 0 : 1;
}
