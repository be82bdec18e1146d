#include "cascade/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

void require_probability(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError(std::string(name) + " must lie in [0,1], got " + std::to_string(x));
    }
}

}  // namespace

namespace detail {

double kl_unchecked(double x, double y) noexcept {
    if (x == y) return 0.0;
    if (y <= 0.0 || y >= 1.0) return kInfinity;
    double r = 0.0;
    if (x > 0.0) r += x * std::log(x / y);
    if (x < 1.0) r += (1.0 - x) * std::log((1.0 - x) / (1.0 - y));
    return r > 0.0 ? r : 0.0;
}

}  // namespace detail

void validate_attractions(std::span<const double> w) {
    if (w.empty()) throw ValidationError("attraction vector is empty");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] >= 0.0 && w[i] <= 1.0)) {
            throw ValidationError("attraction of item " + std::to_string(i + 1) +
                                  " is outside [0,1]: " + std::to_string(w[i]));
        }
    }
}

void validate_list(const RecommendationList& list, std::size_t item_count) {
    if (list.items.empty()) throw ValidationError("recommendation list is empty");
    if (list.size() > item_count) {
        throw ValidationError("recommendation list longer than the item set");
    }
    std::vector<bool> seen(item_count, false);
    for (std::size_t id : list.items) {
        if (id >= item_count) {
            throw ValidationError("item id " + std::to_string(id) + " out of range");
        }
        if (seen[id]) throw ValidationError("duplicate item id " + std::to_string(id));
        seen[id] = true;
    }
}

double kl_bernoulli(double x, double y) {
    require_probability(x, "x");
    require_probability(y, "y");
    return detail::kl_unchecked(x, y);
}

double expected_reward(const RecommendationList& list, std::span<const double> w) {
    validate_list(list, w.size());
    double miss = 1.0;
    for (std::size_t id : list.items) {
        if (!(w[id] >= 0.0 && w[id] <= 1.0)) {
            throw ValidationError("attraction probability of item " + std::to_string(id) +
                                  " outside [0,1]");
        }
        miss *= 1.0 - w[id];
    }
    return 1.0 - miss;
}

std::vector<std::size_t> top_k(std::span<const double> values, std::size_t K) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    K = std::min(K, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (values[a] != values[b]) return values[a] > values[b];
                          return a < b;
                      });
    order.resize(K);
    return order;
}

double optimal_expected_reward(std::span<const double> w, std::size_t K) {
    if (K == 0 || K > w.size()) {
        throw ValidationError("list length K=" + std::to_string(K) + " must lie in [1, L=" +
                              std::to_string(w.size()) + "]");
    }
    RecommendationList best{top_k(w, K)};
    return expected_reward(best, w);
}

double ucb_index(double mean, std::uint64_t n, std::uint64_t elapsed) {
    if (n == 0) throw ValidationError("ucb_index needs at least one observation");
    if (elapsed == 0) throw ValidationError("ucb_index needs elapsed >= 1");
    return mean + std::sqrt(3.0 * std::log(static_cast<double>(elapsed)) /
                            (2.0 * static_cast<double>(n)));
}

double klucb_exploration(std::uint64_t elapsed) {
    if (elapsed == 0) return 0.0;
    const double lt = std::log(static_cast<double>(elapsed));
    const double g = lt + 3.0 * std::log(std::max(lt, 1.0));
    return g > 0.0 ? g : 0.0;
}

double klucb_bound(double mean, double n, double level) {
    if (mean >= 1.0) return 1.0;
    if (level <= 0.0) return mean;
    const double target = level / n;
    const double q_max = std::nextafter(1.0, 0.0);
    if (n * detail::kl_unchecked(mean, q_max) <= level) return 1.0;

    // f(q) = KL(mean, q) - target is convex and increasing on [mean, 1).
    // Pinsker (KL >= 2 (q - mean)^2) puts the start at or right of the root,
    // so Newton descends monotonically; the bracket only guards rounding.
    double lo = mean;
    double hi = 1.0;
    double x = std::min(mean + std::sqrt(target / 2.0), q_max);
    for (int iter = 0; iter < 100; ++iter) {
        const double f = detail::kl_unchecked(mean, x) - target;
        if (f == 0.0) break;
        if (f < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double slope = (x - mean) / (x * (1.0 - x));
        double next = x - f / slope;
        if (next == x) break;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == lo || next == hi) break;
        x = next;
    }
    // Near 1 one ulp can move n KL by more than the tolerance; keep the
    // closest representable neighbour.
    auto gap = [&](double q) { return std::abs(n * detail::kl_unchecked(mean, q) - level); };
    for (int step = 0; step < 8; ++step) {
        const double up = std::nextafter(x, 1.0);
        const double down = std::nextafter(x, 0.0);
        if (up <= q_max && gap(up) < gap(x)) {
            x = up;
        } else if (down > mean && gap(down) < gap(x)) {
            x = down;
        } else {
            break;
        }
    }
    return x;
}

double klucb_index(double mean, std::uint64_t n, std::uint64_t elapsed) {
    if (n == 0) throw ValidationError("klucb_index needs at least one observation");
    if (elapsed == 0) throw ValidationError("klucb_index needs elapsed >= 1");
    return klucb_bound(mean, static_cast<double>(n), klucb_exploration(elapsed));
}

double threshold_g(double x) { return x + 4.0 * std::log(1.0 + x + std::sqrt(2.0 * x)); }

double threshold_beta(std::uint64_t t, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw DomainError("delta must lie in (0,1), got " + std::to_string(delta));
    }
    if (t == 0) throw DomainError("threshold_beta needs t >= 1");
    const double lt = std::log(static_cast<double>(t));
    const double arg = (std::log(3.0) + 1.5 * lt - std::log(delta)) / 2.0;
    return 2.0 * threshold_g(arg) + 6.0 * std::log(1.0 + lt);
}

}  // namespace cascade
