#include "cascade/changepoint.hpp"

#include <algorithm>
#include <cmath>

#include "cascade/core_math.hpp"
#include "cascade/errors.hpp"

namespace cascade {

namespace {

// i * ln(i) for integers, in extended precision. Grown on demand; one table
// per thread so concurrent trials never share it.
class XLogXTable {
public:
    const long double* data(std::size_t max_arg) {
        if (table_.size() <= max_arg) {
            std::size_t old = table_.size();
            table_.resize(std::max(max_arg + 1, 2 * old));
            for (std::size_t i = old; i < table_.size(); ++i) {
                const long double x = static_cast<long double>(i);
                table_[i] = i == 0 ? 0.0L : x * std::log(x);
            }
        }
        return table_.data();
    }

private:
    std::vector<long double> table_;
};

thread_local XLogXTable xlogx_table;

}  // namespace

// With count k of ones among m observations, m * (p ln p + (1-p) ln(1-p)) at
// p = k/m equals xl(k) + xl(m-k) - xl(m). The per-split objective
//   s KL(a, mu) + (n-s) KL(b, mu)
// then reduces to h(k1, s) + h(k2, n-s) - h(k, n), because the cross terms
// sum to n (mu ln mu + (1-mu) ln(1-mu)). No logarithm in the inner loop.
double glr_statistic(const ObservationBuffer& buffer, std::size_t stride) {
    if (stride == 0) throw ValidationError("GLR stride must be >= 1");
    const std::size_t n = buffer.size();
    if (n < 2) return 0.0;
    const auto prefix = buffer.prefix();
    const std::uint32_t total = prefix[n];
    if (total == 0 || total == n) return 0.0;

    const long double* xl = xlogx_table.data(n);
    auto h = [xl](std::size_t k, std::size_t m) { return xl[k] + xl[m - k] - xl[m]; };

    long double best = -INFINITY;
    for (std::size_t s = 1; s < n; s += stride) {
        const std::size_t k1 = prefix[s];
        const std::size_t k2 = total - k1;
        const long double v = h(k1, s) + h(k2, n - s);
        if (v > best) best = v;
    }
    const long double glr = best - h(total, n);
    return glr > 0.0L ? static_cast<double>(glr) : 0.0;
}

bool glrt_detect(const ObservationBuffer& buffer, double delta, std::size_t stride) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("GLRT delta must lie in (0,1)");
    const std::size_t n = buffer.size();
    if (n < 2) return false;
    return glr_statistic(buffer, stride) >= threshold_beta(n, delta);
}

GlrtDetector::GlrtDetector(GlrtOptions options) : options_(options) {
    if (!(options_.delta > 0.0 && options_.delta < 1.0)) {
        throw DomainError("GLRT delta must lie in (0,1)");
    }
    if (options_.stride == 0) throw ValidationError("GLRT stride must be >= 1");
    if (options_.check_period == 0) throw ValidationError("GLRT check period must be >= 1");
}

bool GlrtDetector::check(const ObservationBuffer& buffer) const {
    const std::size_t n = buffer.size();
    if (n < 2 || n % options_.check_period != 0) return false;
    return glrt_detect(buffer, options_.delta, options_.stride);
}

std::optional<std::size_t> first_detection(std::span<const std::uint8_t> stream,
                                           const GlrtOptions& options) {
    const GlrtDetector detector(options);
    ObservationBuffer buffer;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        buffer.push(stream[i] != 0);
        if (detector.check(buffer)) return i + 1;
    }
    return std::nullopt;
}

}  // namespace cascade
