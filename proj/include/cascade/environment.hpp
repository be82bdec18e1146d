#pragma once

// Piecewise-stationary cascade environments.
//
// Time slots are 1-based. Segment i covers [start, end]; a change-point is
// the last slot of a segment, so the new attractions apply from end + 1.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cascade/core_math.hpp"
#include "cascade/rng.hpp"

namespace cascade {

struct SegmentSpec {
    std::size_t start = 1;
    std::size_t end = 1;
    AttractionVector w;

    std::size_t length() const noexcept { return end - start + 1; }
};

/// Immutable problem instance: L items, lists of length K, horizon T and
/// segments tiling [1, T]. Safe to share across threads.
class EnvironmentSpec {
public:
    /// Throws ValidationError if segments do not tile [1, T] contiguously,
    /// a vector has the wrong length or an entry outside [0,1], two
    /// consecutive segments are identical, or K is not in [1, L].
    EnvironmentSpec(std::size_t item_count, std::size_t list_length,
                    std::vector<SegmentSpec> segments);

    std::size_t items() const noexcept { return items_; }
    std::size_t list_length() const noexcept { return list_length_; }
    std::size_t horizon() const noexcept { return segments_.back().end; }
    std::size_t segment_count() const noexcept { return segments_.size(); }
    const std::vector<SegmentSpec>& segments() const noexcept { return segments_; }

    /// nu_1 .. nu_{N-1}.
    std::vector<std::size_t> change_points() const;

    /// Index of the segment containing t; O(log N). Throws ValidationError
    /// for t outside [1, T].
    std::size_t segment_index(std::size_t t) const;

    const AttractionVector& attraction_at(std::size_t t) const {
        return segments_[segment_index(t)].w;
    }

    /// r(A*, w^i) of segment i, precomputed.
    double optimal_reward(std::size_t segment) const { return optimal_rewards_[segment]; }

private:
    std::size_t items_;
    std::size_t list_length_;
    std::vector<SegmentSpec> segments_;
    std::vector<double> optimal_rewards_;
};

struct Feedback {
    // 0-based position of the clicked item; empty when nothing was clicked.
    std::optional<std::size_t> click;

    // Number of browsed positions: click + 1, or the full list length.
    std::size_t observed(std::size_t list_length) const noexcept {
        return click ? *click + 1 : list_length;
    }
};

struct ClickOutcome {
    Feedback feedback;
    bool reward = false;
    std::size_t observed = 0;
};

/// Browses `list` top-down, drawing each attraction lazily, and stops at the
/// first click. The list must already be valid for w.
ClickOutcome simulate_click(std::span<const double> w, const RecommendationList& list, Rng& rng);

/// Expected regret of `list` at slot t:
/// r(A*_t, w_t) - r(list, w_t).
double step_regret(const EnvironmentSpec& spec, std::size_t t, const RecommendationList& list);

/// Ten items, K = 3, ten segments of 2500 slots. Items 1..3 keep attractions
/// 0.80, 0.75, 0.70; items 4..10 draw a base attraction once from
/// U[0.10, 0.50]. Odd segments use the base vector; each even segment lifts
/// three randomly chosen items among 4..10 to 0.9.
EnvironmentSpec make_synthetic(std::uint64_t seed);

/// Gap of the randomized lower-bound instance: (L-1) / (4 sqrt(T L ln(4/3))).
double hard_instance_epsilon(std::size_t items, std::size_t horizon);

/// N blocks of length ceil(T/N) (the last takes the remainder); every item
/// sits at 1/2 except one best item at 1/2 + eps. The best item of block 1 is
/// uniform over all items, later blocks pick uniformly among the other L-1.
EnvironmentSpec make_hard_instance(std::size_t items, std::size_t list_length,
                                   std::size_t blocks, std::size_t horizon, std::uint64_t seed);

struct LoadedEnvironment {
    EnvironmentSpec spec;
    std::vector<std::string> warnings;
};

/// Reads the segment CSV format (`start,end,w1,...,wL`, one row per
/// segment). Every probability is multiplied by `scale`; scaled values above
/// 1 are clipped to 1 with a warning. Errors carry the line number.
LoadedEnvironment load_segments_csv(const std::filesystem::path& path, std::size_t list_length,
                                    double scale = 1.0);
LoadedEnvironment parse_segments_csv(std::istream& in, const std::string& source,
                                     std::size_t list_length, double scale = 1.0);

void write_segments_csv(const EnvironmentSpec& spec, std::ostream& out);
void write_segments_csv(const EnvironmentSpec& spec, const std::filesystem::path& path);

struct SegmentRequirement {
    std::size_t segment = 0;  // 1-based
    std::size_t length = 0;
    double required = 0.0;  // lower bound on the length; may be +inf
    bool satisfied = true;
};

struct Assumption2Report {
    double beta = 0.0;                     // beta(T, delta)
    std::vector<double> change_magnitude;  // Delta^0 .. Delta^{N-1}
    std::vector<double> window;            // d_0 .. d_{N-1}
    std::vector<SegmentRequirement> segments;
    bool satisfied = true;
};

/// Segment-length condition of the detection analysis:
/// d_i = ceil(4 L beta(T, delta) / (p Delta_i^2) + L / p) and
/// nu_i - nu_{i-1} >= 2 max(d_i, d_{i-1}) (last segment: >= 2 d_{N-1}).
/// A single-segment instance is vacuously satisfied.
Assumption2Report check_assumption2(const EnvironmentSpec& spec, double p, double delta);

}  // namespace cascade
