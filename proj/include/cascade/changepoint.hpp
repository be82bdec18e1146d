#pragma once

// Bernoulli GLR change-point detection over a single observation stream.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cascade {

/// Binary observations since the last restart, stored as prefix counts of
/// ones so that the mean of any contiguous range is O(1).
class ObservationBuffer {
public:
    ObservationBuffer() : prefix_{0} {}

    void push(bool x) { prefix_.push_back(prefix_.back() + (x ? 1u : 0u)); }

    // Keeps capacity; the next observation starts a fresh stream.
    void clear() { prefix_.resize(1); }

    std::size_t size() const noexcept { return prefix_.size() - 1; }
    bool empty() const noexcept { return size() == 0; }
    std::uint32_t ones() const noexcept { return prefix_.back(); }

    // Mean of all observations; 0 for an empty buffer.
    double mean() const noexcept {
        return empty() ? 0.0 : static_cast<double>(ones()) / static_cast<double>(size());
    }

    // Mean of observations a+1..b (1-based, inclusive), requires a < b <= size().
    double mean(std::size_t a, std::size_t b) const noexcept {
        return static_cast<double>(prefix_[b] - prefix_[a]) / static_cast<double>(b - a);
    }

    // prefix()[s] is the number of ones among the first s observations.
    std::span<const std::uint32_t> prefix() const noexcept { return prefix_; }

private:
    std::vector<std::uint32_t> prefix_;
};

struct GlrtOptions {
    double delta = 0.01;
    std::size_t stride = 1;        // evaluate every stride-th split point
    std::size_t check_period = 1;  // test only when size() % check_period == 0
};

/// GLR statistic: sup over splits s in {1, 1+stride, ...} of
/// s KL(mean_{1:s}, mean_{1:n}) + (n-s) KL(mean_{s+1:n}, mean_{1:n}).
/// Returns 0 when size() < 2. Throws ValidationError if stride == 0.
double glr_statistic(const ObservationBuffer& buffer, std::size_t stride = 1);

/// True iff glr_statistic(buffer, stride) >= threshold_beta(n, delta).
bool glrt_detect(const ObservationBuffer& buffer, double delta, std::size_t stride = 1);

/// Stateful detector applying check_period on top of glrt_detect.
class GlrtDetector {
public:
    explicit GlrtDetector(GlrtOptions options);

    const GlrtOptions& options() const noexcept { return options_; }

    // Called right after a push into `buffer`.
    bool check(const ObservationBuffer& buffer) const;

private:
    GlrtOptions options_;
};

/// Feeds `stream` into a fresh buffer and returns the 1-based index of the
/// first observation at which the detector fires.
std::optional<std::size_t> first_detection(std::span<const std::uint8_t> stream,
                                           const GlrtOptions& options);

}  // namespace cascade
