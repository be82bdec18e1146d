#pragma once

// Numeric kernels shared by the detector, the environments and the policies.
// Everything here is a pure function; all logarithms are natural.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace cascade {

// Expected attraction w(l) of every item l, entries in [0,1].
using AttractionVector = std::vector<double>;

// Ordered list of K distinct item indices. Items are 0-based internally
// (item l of the model is index l-1); position 0 is browsed first.
struct RecommendationList {
    std::vector<std::size_t> items;

    std::size_t size() const noexcept { return items.size(); }
    std::size_t operator[](std::size_t pos) const noexcept { return items[pos]; }
    bool operator==(const RecommendationList&) const = default;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Throws ValidationError if w is empty or has an entry outside [0,1].
void validate_attractions(std::span<const double> w);

// Throws ValidationError unless the list holds distinct ids in [0, item_count).
void validate_list(const RecommendationList& list, std::size_t item_count);

/// Bernoulli KL divergence KL(x, y) in nats with 0 log 0 = 0.
/// Returns +inf when y is 0 or 1 and x != y. Throws DomainError when an
/// argument lies outside [0,1].
double kl_bernoulli(double x, double y);

/// Probability of at least one click under the cascade model:
/// 1 - prod_k (1 - w(a_k)). Order-invariant.
double expected_reward(const RecommendationList& list, std::span<const double> w);

/// Expected reward of the K most attractive items (ties to the lowest id).
double optimal_expected_reward(std::span<const double> w, std::size_t K);

/// Indices of the K largest values, in descending order of value; ties go
/// to the lowest index. +inf values compare equal to each other.
std::vector<std::size_t> top_k(std::span<const double> values, std::size_t K);

/// mean + sqrt(3 ln(elapsed) / (2n)); not clipped. Throws ValidationError if
/// n == 0 or elapsed == 0.
double ucb_index(double mean, std::uint64_t n, std::uint64_t elapsed);

/// Exploration level of the KL-UCB index:
/// max(0, ln t + 3 ln(max(ln t, 1))).
double klucb_exploration(std::uint64_t elapsed);

/// Largest q in [mean, 1] with n * KL(mean, q) <= klucb_exploration(elapsed).
/// Returns exactly 1 when the constraint still holds at the largest double
/// below 1. Throws ValidationError if n == 0 or elapsed == 0.
double klucb_index(double mean, std::uint64_t n, std::uint64_t elapsed);

/// Same root search for an explicit level: max{q : n KL(mean, q) <= level}.
double klucb_bound(double mean, double n, double level);

/// x + 4 ln(1 + x + sqrt(2x)), the closed-form bound used in place of the
/// mixture-martingale threshold function.
double threshold_g(double x);

/// GLRT threshold beta(t, delta) = 2 G(ln(3 t sqrt(t) / delta) / 2)
///                                 + 6 ln(1 + ln t).
/// Throws DomainError if delta is not in (0,1) or t == 0.
double threshold_beta(std::uint64_t t, double delta);

namespace detail {

// Unchecked KL for hot loops; arguments must already lie in [0,1].
double kl_unchecked(double x, double y) noexcept;

}  // namespace detail

}  // namespace cascade
