#include "cascade/policies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cascade/errors.hpp"

namespace cascade {

double item_index(IndexKind kind, double mean, std::uint64_t n, std::uint64_t elapsed) {
    if (n == 0) return kInfinity;
    return kind == IndexKind::Ucb ? ucb_index(mean, n, elapsed) : klucb_index(mean, n, elapsed);
}

// ---------------------------------------------------------------------------
// CascadeIndexPolicy

CascadeIndexPolicy::CascadeIndexPolicy(IndexKind kind, std::size_t items, std::size_t list_length)
    : kind_(kind),
      list_length_(list_length),
      counts_(items, 0),
      ones_(items, 0),
      scratch_(items, 0.0) {
    if (list_length == 0 || list_length > items) throw ValidationError("K must lie in [1, L]");
}

std::string_view CascadeIndexPolicy::name() const {
    return kind_ == IndexKind::Ucb ? "CascadeUCB1" : "CascadeKL-UCB";
}

double CascadeIndexPolicy::mean(std::size_t item) const {
    return counts_[item] == 0 ? 0.0
                              : static_cast<double>(ones_[item]) / static_cast<double>(counts_[item]);
}

RecommendationList CascadeIndexPolicy::select(std::size_t t, Rng&) {
    const std::uint64_t elapsed = t - tau_;
    for (std::size_t l = 0; l < counts_.size(); ++l) {
        scratch_[l] = item_index(kind_, mean(l), counts_[l], elapsed);
    }
    return RecommendationList{top_k(scratch_, list_length_)};
}

Restart CascadeIndexPolicy::update(std::size_t, const RecommendationList& list,
                                   const Feedback& feedback) {
    const std::size_t observed = feedback.observed(list.size());
    for (std::size_t pos = 0; pos < observed; ++pos) {
        const std::size_t item = list[pos];
        ++counts_[item];
        if (feedback.click == pos) ++ones_[item];
    }
    return Restart::None;
}

void CascadeIndexPolicy::restart(std::size_t t) {
    std::fill(counts_.begin(), counts_.end(), 0);
    std::fill(ones_.begin(), ones_.end(), 0);
    tau_ = t;
}

// ---------------------------------------------------------------------------
// GlrtCascadePolicy

GlrtCascadePolicy::GlrtCascadePolicy(GlrtPolicyOptions options, std::size_t items,
                                     std::size_t list_length)
    : options_(options),
      detector_(options.detector),
      items_(items),
      list_length_(list_length),
      cycle_(0),
      buffers_(items),
      scratch_(items, 0.0) {
    if (list_length == 0 || list_length > items) throw ValidationError("K must lie in [1, L]");
    if (!(options_.exploration > 0.0 && options_.exploration <= 1.0)) {
        throw ValidationError("exploration probability p must lie in (0,1]");
    }
    cycle_ = static_cast<std::size_t>(
        std::floor(static_cast<double>(items) / options_.exploration));
    if (cycle_ < items) throw ValidationError("floor(L/p) must be at least L");
    others_.reserve(items);
}

std::string_view GlrtCascadePolicy::name() const {
    return options_.kind == IndexKind::Ucb ? "GLRT-CascadeUCB" : "GLRT-CascadeKL-UCB";
}

std::optional<std::size_t> GlrtCascadePolicy::exploration_item(std::size_t t) const {
    // a = 0 takes the index branch: items are numbered 1..L.
    const std::size_t a = (t - tau_) % cycle_;
    if (a >= 1 && a <= items_) return a - 1;
    return std::nullopt;
}

RecommendationList GlrtCascadePolicy::select(std::size_t t, Rng& rng) {
    if (const auto forced = exploration_item(t)) {
        RecommendationList list;
        list.items.reserve(list_length_);
        list.items.push_back(*forced);
        others_.clear();
        for (std::size_t l = 0; l < items_; ++l) {
            if (l != *forced) others_.push_back(l);
        }
        for (std::size_t j = 0; j + 1 < list_length_; ++j) {
            const std::size_t pick = j + rng.below(others_.size() - j);
            std::swap(others_[j], others_[pick]);
            list.items.push_back(others_[j]);
        }
        return list;
    }
    const std::uint64_t elapsed = t - tau_;
    for (std::size_t l = 0; l < items_; ++l) {
        const auto& buf = buffers_[l];
        scratch_[l] = item_index(options_.kind, buf.mean(), buf.size(), elapsed);
    }
    return RecommendationList{top_k(scratch_, list_length_)};
}

Restart GlrtCascadePolicy::update(std::size_t t, const RecommendationList& list,
                                  const Feedback& feedback) {
    const std::size_t observed = feedback.observed(list.size());
    for (std::size_t pos = 0; pos < observed; ++pos) {
        auto& buf = buffers_[list[pos]];
        buf.push(feedback.click == pos);
        if (detector_.check(buf)) {
            // Updates for later positions of this slot are dropped.
            restart(t);
            return Restart::Detected;
        }
    }
    return Restart::None;
}

void GlrtCascadePolicy::restart(std::size_t t) {
    for (auto& buf : buffers_) buf.clear();
    tau_ = t;
}

// ---------------------------------------------------------------------------
// DiscountedCascadeUcb

DiscountedCascadeUcb::DiscountedCascadeUcb(std::size_t items, std::size_t list_length,
                                           double gamma, double xi)
    : list_length_(list_length),
      gamma_(gamma),
      xi_(xi),
      counts_(items, 0.0),
      sums_(items, 0.0),
      seen_(items, false),
      scratch_(items, 0.0) {
    if (list_length == 0 || list_length > items) throw ValidationError("K must lie in [1, L]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0,1]");
    if (!(xi > 0.0)) throw ValidationError("xi must be positive");
}

RecommendationList DiscountedCascadeUcb::select(std::size_t, Rng&) {
    double total = 0.0;
    for (double c : counts_) total += c;
    const double log_total = total > 1.0 ? std::log(total) : 0.0;
    for (std::size_t l = 0; l < counts_.size(); ++l) {
        scratch_[l] = seen_[l] ? sums_[l] / counts_[l] + 2.0 * std::sqrt(xi_ * log_total / counts_[l])
                               : kInfinity;
    }
    return RecommendationList{top_k(scratch_, list_length_)};
}

Restart DiscountedCascadeUcb::update(std::size_t, const RecommendationList& list,
                                     const Feedback& feedback) {
    for (std::size_t l = 0; l < counts_.size(); ++l) {
        counts_[l] *= gamma_;
        sums_[l] *= gamma_;
    }
    const std::size_t observed = feedback.observed(list.size());
    for (std::size_t pos = 0; pos < observed; ++pos) {
        const std::size_t item = list[pos];
        counts_[item] += 1.0;
        if (feedback.click == pos) sums_[item] += 1.0;
        seen_[item] = true;
    }
    return Restart::None;
}

void DiscountedCascadeUcb::restart(std::size_t t) {
    std::fill(counts_.begin(), counts_.end(), 0.0);
    std::fill(sums_.begin(), sums_.end(), 0.0);
    std::fill(seen_.begin(), seen_.end(), false);
    tau_ = t;
}

// ---------------------------------------------------------------------------
// SlidingWindowCascadeUcb

SlidingWindowCascadeUcb::SlidingWindowCascadeUcb(std::size_t items, std::size_t list_length,
                                                 std::size_t window, double xi)
    : list_length_(list_length),
      window_(window),
      xi_(xi),
      counts_(items, 0),
      ones_(items, 0),
      scratch_(items, 0.0) {
    if (list_length == 0 || list_length > items) throw ValidationError("K must lie in [1, L]");
    if (window == 0) throw ValidationError("sliding window must be at least one slot");
    if (!(xi > 0.0)) throw ValidationError("xi must be positive");
}

void SlidingWindowCascadeUcb::evict_before(std::size_t first_slot) {
    while (!history_.empty() && history_.front().slot < first_slot) {
        const auto& obs = history_.front();
        --counts_[obs.item];
        if (obs.value) --ones_[obs.item];
        history_.pop_front();
    }
}

RecommendationList SlidingWindowCascadeUcb::select(std::size_t t, Rng&) {
    // Window holds slots t - window .. t - 1.
    if (t > window_) evict_before(t - window_);
    const std::size_t horizon = t - tau_;
    const double log_term = std::log(static_cast<double>(std::min(horizon, window_)));
    for (std::size_t l = 0; l < counts_.size(); ++l) {
        if (counts_[l] == 0) {
            scratch_[l] = kInfinity;
            continue;
        }
        const double n = static_cast<double>(counts_[l]);
        scratch_[l] = static_cast<double>(ones_[l]) / n + std::sqrt(xi_ * log_term / n);
    }
    return RecommendationList{top_k(scratch_, list_length_)};
}

Restart SlidingWindowCascadeUcb::update(std::size_t t, const RecommendationList& list,
                                        const Feedback& feedback) {
    const std::size_t observed = feedback.observed(list.size());
    for (std::size_t pos = 0; pos < observed; ++pos) {
        const bool value = feedback.click == pos;
        history_.push_back({t, list[pos], value});
        ++counts_[list[pos]];
        if (value) ++ones_[list[pos]];
    }
    return Restart::None;
}

void SlidingWindowCascadeUcb::restart(std::size_t t) {
    history_.clear();
    std::fill(counts_.begin(), counts_.end(), 0);
    std::fill(ones_.begin(), ones_.end(), 0);
    tau_ = t;
}

// ---------------------------------------------------------------------------
// OracleRestart

OracleRestart::OracleRestart(std::unique_ptr<Policy> base, std::vector<std::size_t> change_points)
    : base_(std::move(base)),
      change_points_(std::move(change_points)),
      name_("Oracle-" + std::string(base_->name())) {
    std::sort(change_points_.begin(), change_points_.end());
}

Restart OracleRestart::update(std::size_t t, const RecommendationList& list,
                              const Feedback& feedback) {
    base_->update(t, list, feedback);
    while (next_ < change_points_.size() && change_points_[next_] < t) ++next_;
    if (next_ < change_points_.size() && change_points_[next_] == t) {
        base_->restart(t);
        ++next_;
        return Restart::Scheduled;
    }
    return Restart::None;
}

// ---------------------------------------------------------------------------
// Factory

namespace {

struct PolicyNames {
    PolicyKind kind;
    std::string_view id;
    std::string_view display;
};

constexpr PolicyNames kPolicyNames[] = {
    {PolicyKind::GlrtCascadeUcb, "glrt-ucb", "GLRT-CascadeUCB"},
    {PolicyKind::GlrtCascadeKlUcb, "glrt-klucb", "GLRT-CascadeKL-UCB"},
    {PolicyKind::CascadeUcb1, "ucb1", "CascadeUCB1"},
    {PolicyKind::CascadeKlUcb, "klucb", "CascadeKL-UCB"},
    {PolicyKind::CascadeDucb, "ducb", "CascadeDUCB"},
    {PolicyKind::CascadeSwUcb, "swucb", "CascadeSWUCB"},
    {PolicyKind::OracleCascadeUcb1, "oracle-ucb1", "Oracle-CascadeUCB1"},
    {PolicyKind::OracleCascadeKlUcb, "oracle-klucb", "Oracle-CascadeKL-UCB"},
};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::string_view policy_id(PolicyKind kind) {
    for (const auto& p : kPolicyNames) {
        if (p.kind == kind) return p.id;
    }
    return "unknown";
}

std::string_view policy_display_name(PolicyKind kind) {
    for (const auto& p : kPolicyNames) {
        if (p.kind == kind) return p.display;
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view text) {
    for (const auto& p : kPolicyNames) {
        if (iequals(text, p.id) || iequals(text, p.display)) return p.kind;
    }
    std::string known;
    for (const auto& p : kPolicyNames) known += std::string(known.empty() ? "" : ", ") + std::string(p.id);
    throw ValidationError("unknown policy '" + std::string(text) + "' (known: " + known + ")");
}

double exploration_rate(ExplorationRule rule, std::size_t segments, std::size_t items,
                        std::size_t horizon) {
    const double T = static_cast<double>(horizon);
    const double N = static_cast<double>(segments);
    const double base = N * std::log(T) / T;
    const double p = rule == ExplorationRule::Experimental
                         ? 0.1 * std::sqrt(base)
                         : std::sqrt(base * static_cast<double>(items));
    return std::min(p, 1.0);
}

ResolvedParams resolve_params(const PolicyParams& params, const EnvironmentSpec& spec) {
    const std::size_t T = spec.horizon();
    const double Td = static_cast<double>(T);
    ResolvedParams out{};
    out.exploration = params.exploration.value_or(exploration_rate(
        params.exploration_rule, params.segments_hint.value_or(spec.segment_count()), spec.items(), T));
    out.delta = params.delta.value_or(1.0 / Td);
    out.stride = params.stride;
    out.check_period = params.check_period;
    out.xi = params.xi;
    out.gamma = params.gamma.value_or(1.0 - 0.25 / std::sqrt(Td));
    out.window = params.window.value_or(
        static_cast<std::size_t>(std::ceil(2.0 * std::sqrt(Td * std::log(Td)))));

    if (!(out.exploration > 0.0 && out.exploration <= 1.0)) {
        throw ValidationError("exploration probability p must lie in (0,1], got " +
                              std::to_string(out.exploration));
    }
    if (!(out.delta > 0.0 && out.delta < 1.0)) {
        throw ValidationError("delta must lie in (0,1), got " + std::to_string(out.delta));
    }
    if (out.stride == 0 || out.check_period == 0) {
        throw ValidationError("stride and check_period must be >= 1");
    }
    if (!(out.gamma > 0.0 && out.gamma <= 1.0)) throw ValidationError("gamma must lie in (0,1]");
    if (out.window == 0) out.window = 1;
    return out;
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const ResolvedParams& params,
                                    const EnvironmentSpec& spec) {
    const std::size_t L = spec.items();
    const std::size_t K = spec.list_length();
    auto glrt = [&](IndexKind index) {
        GlrtPolicyOptions options;
        options.kind = index;
        options.exploration = params.exploration;
        options.detector = {params.delta, params.stride, params.check_period};
        return std::make_unique<GlrtCascadePolicy>(options, L, K);
    };
    switch (kind) {
        case PolicyKind::GlrtCascadeUcb:
            return glrt(IndexKind::Ucb);
        case PolicyKind::GlrtCascadeKlUcb:
            return glrt(IndexKind::KlUcb);
        case PolicyKind::CascadeUcb1:
            return std::make_unique<CascadeIndexPolicy>(IndexKind::Ucb, L, K);
        case PolicyKind::CascadeKlUcb:
            return std::make_unique<CascadeIndexPolicy>(IndexKind::KlUcb, L, K);
        case PolicyKind::CascadeDucb:
            return std::make_unique<DiscountedCascadeUcb>(L, K, params.gamma, params.xi);
        case PolicyKind::CascadeSwUcb:
            return std::make_unique<SlidingWindowCascadeUcb>(L, K, params.window, params.xi);
        case PolicyKind::OracleCascadeUcb1:
            return std::make_unique<OracleRestart>(
                std::make_unique<CascadeIndexPolicy>(IndexKind::Ucb, L, K), spec.change_points());
        case PolicyKind::OracleCascadeKlUcb:
            return std::make_unique<OracleRestart>(
                std::make_unique<CascadeIndexPolicy>(IndexKind::KlUcb, L, K), spec.change_points());
    }
    throw ValidationError("unhandled policy kind");
}

}  // namespace cascade
