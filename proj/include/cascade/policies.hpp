#pragma once

// Cascading bandit policies. A policy is driven one slot at a time:
// select(t) then update(t) with the feedback of that slot.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/changepoint.hpp"
#include "cascade/core_math.hpp"
#include "cascade/environment.hpp"
#include "cascade/rng.hpp"

namespace cascade {

enum class IndexKind { Ucb, KlUcb };

// What happened to the statistics at the end of a slot.
enum class Restart { None, Detected, Scheduled };

class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string_view name() const = 0;

    virtual RecommendationList select(std::size_t t, Rng& rng) = 0;

    virtual Restart update(std::size_t t, const RecommendationList& list,
                           const Feedback& feedback) = 0;

    // Drops all statistics; slot t becomes the new reference time tau.
    virtual void restart(std::size_t t) = 0;

    virtual std::size_t last_restart() const = 0;
};

// Index of one item from its empirical mean, count and the slots since the
// last restart; +inf for an unobserved item.
double item_index(IndexKind kind, double mean, std::uint64_t n, std::uint64_t elapsed);

/// CascadeUCB1 / CascadeKL-UCB: top-K by index, indices use elapsed = t - tau,
/// tau only moves through restart().
class CascadeIndexPolicy final : public Policy {
public:
    CascadeIndexPolicy(IndexKind kind, std::size_t items, std::size_t list_length);

    std::string_view name() const override;
    RecommendationList select(std::size_t t, Rng& rng) override;
    Restart update(std::size_t t, const RecommendationList& list, const Feedback& feedback) override;
    void restart(std::size_t t) override;
    std::size_t last_restart() const override { return tau_; }

    std::uint64_t count(std::size_t item) const { return counts_[item]; }
    double mean(std::size_t item) const;

private:
    IndexKind kind_;
    std::size_t list_length_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> ones_;
    std::vector<double> scratch_;
    std::size_t tau_ = 0;
};

struct GlrtPolicyOptions {
    IndexKind kind = IndexKind::Ucb;
    double exploration = 0.1;  // p
    GlrtOptions detector;
};

/// GLRT-CascadeUCB / GLRT-CascadeKL-UCB: forced uniform exploration on a
/// floor(L/p) cycle, top-K by index otherwise, and a global restart whenever
/// the GLR test fires on the item that was just updated.
class GlrtCascadePolicy final : public Policy {
public:
    /// Throws ValidationError unless p is in (0,1] (floor(L/p) >= L follows).
    GlrtCascadePolicy(GlrtPolicyOptions options, std::size_t items, std::size_t list_length);

    std::string_view name() const override;
    RecommendationList select(std::size_t t, Rng& rng) override;
    Restart update(std::size_t t, const RecommendationList& list, const Feedback& feedback) override;
    void restart(std::size_t t) override;
    std::size_t last_restart() const override { return tau_; }

    std::size_t exploration_cycle() const noexcept { return cycle_; }

    // Item forced into position 0 at slot t, if t is an exploration slot.
    std::optional<std::size_t> exploration_item(std::size_t t) const;

    const ObservationBuffer& buffer(std::size_t item) const { return buffers_[item]; }

private:
    GlrtPolicyOptions options_;
    GlrtDetector detector_;
    std::size_t items_;
    std::size_t list_length_;
    std::size_t cycle_;
    std::vector<ObservationBuffer> buffers_;
    std::vector<double> scratch_;
    std::vector<std::size_t> others_;
    std::size_t tau_ = 0;
};

/// CascadeDUCB: statistics discounted by gamma every slot;
/// index = discounted mean + 2 sqrt(xi ln n_gamma / N_gamma(l)).
class DiscountedCascadeUcb final : public Policy {
public:
    DiscountedCascadeUcb(std::size_t items, std::size_t list_length, double gamma, double xi);

    std::string_view name() const override { return "CascadeDUCB"; }
    RecommendationList select(std::size_t t, Rng& rng) override;
    Restart update(std::size_t t, const RecommendationList& list, const Feedback& feedback) override;
    void restart(std::size_t t) override;
    std::size_t last_restart() const override { return tau_; }

    double discounted_count(std::size_t item) const { return counts_[item]; }

private:
    std::size_t list_length_;
    double gamma_;
    double xi_;
    std::vector<double> counts_;
    std::vector<double> sums_;
    std::vector<bool> seen_;
    std::vector<double> scratch_;
    std::size_t tau_ = 0;
};

/// CascadeSWUCB: statistics over the observations of the last `window`
/// slots; index = window mean + sqrt(xi ln(min(t, window)) / N_w(l)).
class SlidingWindowCascadeUcb final : public Policy {
public:
    SlidingWindowCascadeUcb(std::size_t items, std::size_t list_length, std::size_t window,
                            double xi);

    std::string_view name() const override { return "CascadeSWUCB"; }
    RecommendationList select(std::size_t t, Rng& rng) override;
    Restart update(std::size_t t, const RecommendationList& list, const Feedback& feedback) override;
    void restart(std::size_t t) override;
    std::size_t last_restart() const override { return tau_; }

    std::uint64_t window_count(std::size_t item) const { return counts_[item]; }

private:
    struct Observation {
        std::size_t slot;
        std::size_t item;
        bool value;
    };

    void evict_before(std::size_t first_slot);

    std::size_t list_length_;
    std::size_t window_;
    double xi_;
    std::deque<Observation> history_;
    std::vector<std::uint64_t> counts_;
    std::vector<std::uint64_t> ones_;
    std::vector<double> scratch_;
    std::size_t tau_ = 0;
};

/// Restarts the wrapped policy at the end of every true change-point slot,
/// so slot nu_i + 1 starts from empty statistics with tau = nu_i.
class OracleRestart final : public Policy {
public:
    OracleRestart(std::unique_ptr<Policy> base, std::vector<std::size_t> change_points);

    std::string_view name() const override { return name_; }
    RecommendationList select(std::size_t t, Rng& rng) override { return base_->select(t, rng); }
    Restart update(std::size_t t, const RecommendationList& list, const Feedback& feedback) override;
    void restart(std::size_t t) override { base_->restart(t); }
    std::size_t last_restart() const override { return base_->last_restart(); }

private:
    std::unique_ptr<Policy> base_;
    std::vector<std::size_t> change_points_;
    std::size_t next_ = 0;
    std::string name_;
};

enum class PolicyKind {
    GlrtCascadeUcb,
    GlrtCascadeKlUcb,
    CascadeUcb1,
    CascadeKlUcb,
    CascadeDucb,
    CascadeSwUcb,
    OracleCascadeUcb1,
    OracleCascadeKlUcb,
};

inline constexpr PolicyKind kAllPolicies[] = {
    PolicyKind::CascadeUcb1,       PolicyKind::CascadeKlUcb,       PolicyKind::CascadeDucb,
    PolicyKind::CascadeSwUcb,      PolicyKind::GlrtCascadeUcb,     PolicyKind::GlrtCascadeKlUcb,
    PolicyKind::OracleCascadeUcb1, PolicyKind::OracleCascadeKlUcb,
};

// Short identifier used in configs and directory names, e.g. "glrt-ucb".
std::string_view policy_id(PolicyKind kind);
// Display name, e.g. "GLRT-CascadeUCB".
std::string_view policy_display_name(PolicyKind kind);
// Accepts either form, case-insensitive. Throws ValidationError otherwise.
PolicyKind parse_policy_kind(std::string_view text);

enum class ExplorationRule { Experimental, Corollary };

/// Tuning knobs; unset values resolve against the environment.
struct PolicyParams {
    std::optional<double> exploration;  // p
    ExplorationRule exploration_rule = ExplorationRule::Experimental;
    std::optional<std::size_t> segments_hint;  // N used by the p rule
    std::optional<double> delta;               // default 1/T
    std::size_t stride = 1;
    std::size_t check_period = 1;
    double xi = 0.5;
    std::optional<double> gamma;          // default 1 - 0.25/sqrt(T)
    std::optional<std::size_t> window;    // default ceil(2 sqrt(T ln T))
};

struct ResolvedParams {
    double exploration;
    double delta;
    std::size_t stride;
    std::size_t check_period;
    double xi;
    double gamma;
    std::size_t window;
};

/// p = 0.1 sqrt(N ln T / T) (experimental) or sqrt(N L ln T / T) (corollary),
/// capped at 1.
double exploration_rate(ExplorationRule rule, std::size_t segments, std::size_t items,
                        std::size_t horizon);

ResolvedParams resolve_params(const PolicyParams& params, const EnvironmentSpec& spec);

std::unique_ptr<Policy> make_policy(PolicyKind kind, const ResolvedParams& params,
                                    const EnvironmentSpec& spec);

}  // namespace cascade
