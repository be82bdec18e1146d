#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "cascade/errors.hpp"
#include "cascade/policies.hpp"

using namespace cascade;
using Catch::Matchers::WithinAbs;

namespace {

EnvironmentSpec random_environment(Rng& rng) {
    const std::size_t L = 2 + rng.below(9);
    const std::size_t K = 1 + rng.below(L);
    const std::size_t N = 1 + rng.below(4);
    std::vector<SegmentSpec> segments;
    std::size_t start = 1;
    for (std::size_t i = 0; i < N; ++i) {
        SegmentSpec s;
        s.start = start;
        s.end = start + 50 + rng.below(200);
        s.w.resize(L);
        for (auto& x : s.w) x = rng.uniform();
        start = s.end + 1;
        segments.push_back(std::move(s));
    }
    return EnvironmentSpec(L, K, std::move(segments));
}

PolicyParams fuzz_params() {
    PolicyParams p;
    p.exploration = 0.2;
    p.delta = 0.05;
    return p;
}

// Feedback with every position browsed and nothing clicked.
Feedback no_click() { return Feedback{}; }

Feedback click_at(std::size_t pos) { return Feedback{pos}; }

}  // namespace

TEST_CASE("item_index", "[policies][index]") {
    CHECK(std::isinf(item_index(IndexKind::Ucb, 0.0, 0, 10)));
    CHECK(std::isinf(item_index(IndexKind::KlUcb, 0.0, 0, 10)));
    CHECK(item_index(IndexKind::Ucb, 0.5, 100, 1000) == ucb_index(0.5, 100, 1000));
    CHECK(item_index(IndexKind::KlUcb, 0.5, 100, 1000) == klucb_index(0.5, 100, 1000));
}

TEST_CASE("every policy emits valid lists", "[policies][property]") {
    Rng env_rng(3);
    for (int round = 0; round < 12; ++round) {
        const auto spec = random_environment(env_rng);
        const auto params = resolve_params(fuzz_params(), spec);
        for (PolicyKind kind : kAllPolicies) {
            auto policy = make_policy(kind, params, spec);
            Rng rng(static_cast<std::uint64_t>(round) * 31 + static_cast<std::uint64_t>(kind));
            for (std::size_t t = 1; t <= spec.horizon(); ++t) {
                const auto list = policy->select(t, rng);
                INFO(policy->name() << " at t = " << t);
                REQUIRE(list.size() == spec.list_length());
                REQUIRE_NOTHROW(validate_list(list, spec.items()));
                const auto out = simulate_click(spec.attraction_at(t), list, rng);
                policy->update(t, list, out.feedback);
                REQUIRE(policy->last_restart() <= t);
            }
        }
    }
}

TEST_CASE("exploration schedule", "[policies][glrt]") {
    GlrtPolicyOptions options;
    options.exploration = 0.3;
    GlrtCascadePolicy policy(options, 5, 2);
    REQUIRE(policy.exploration_cycle() == 16);  // floor(5 / 0.3)

    CHECK(policy.exploration_item(1) == std::optional<std::size_t>{0});
    CHECK(policy.exploration_item(5) == std::optional<std::size_t>{4});
    CHECK_FALSE(policy.exploration_item(6));
    CHECK_FALSE(policy.exploration_item(16));
    CHECK(policy.exploration_item(17) == std::optional<std::size_t>{0});

    // Any window of floor(L/p) consecutive slots holds exactly L forced slots.
    for (std::size_t start = 1; start < 60; ++start) {
        std::size_t forced = 0;
        for (std::size_t t = start; t < start + 16; ++t) forced += policy.exploration_item(t) ? 1 : 0;
        REQUIRE(forced == 5);
    }

    Rng rng(1);
    for (std::size_t t = 1; t <= 5; ++t) {
        const auto list = policy.select(t, rng);
        CHECK(list[0] == t - 1);
        CHECK(list[1] != list[0]);
    }

    policy.restart(40);
    CHECK(policy.exploration_item(41) == std::optional<std::size_t>{0});
    CHECK_FALSE(policy.exploration_item(40));
}

TEST_CASE("exploration fills the other positions uniformly", "[policies][glrt][property]") {
    GlrtPolicyOptions options;
    options.exploration = 1.0;
    GlrtCascadePolicy policy(options, 4, 2);
    Rng rng(5);
    std::vector<int> second(4, 0);
    constexpr int draws = 30000;
    for (int i = 0; i < draws; ++i) second[policy.select(1, rng)[1]]++;
    CHECK(second[0] == 0);
    for (std::size_t l = 1; l < 4; ++l) {
        CHECK(std::abs(second[l] / static_cast<double>(draws) - 1.0 / 3.0) < 0.015);
    }
}

TEST_CASE("GLRT invalid configurations", "[policies][glrt][errors]") {
    GlrtPolicyOptions options;
    options.exploration = 0.0;
    CHECK_THROWS_AS(GlrtCascadePolicy(options, 5, 2), ValidationError);
    options.exploration = 1.5;
    CHECK_THROWS_AS(GlrtCascadePolicy(options, 5, 2), ValidationError);
    options.exploration = 0.5;
    CHECK_THROWS_AS(GlrtCascadePolicy(options, 5, 6), ValidationError);
    options.detector.delta = 2.0;
    CHECK_THROWS_AS(GlrtCascadePolicy(options, 5, 2), DomainError);
}

TEST_CASE("cascade feedback updates browsed positions only", "[policies][glrt]") {
    GlrtPolicyOptions options;
    options.detector.delta = 1e-9;
    GlrtCascadePolicy policy(options, 5, 3);
    const RecommendationList list{{3, 1, 4}};

    CHECK(policy.update(1, list, click_at(1)) == Restart::None);
    CHECK(policy.buffer(3).size() == 1);
    CHECK(policy.buffer(3).ones() == 0);
    CHECK(policy.buffer(1).size() == 1);
    CHECK(policy.buffer(1).ones() == 1);
    CHECK(policy.buffer(4).size() == 0);

    CHECK(policy.update(2, list, no_click()) == Restart::None);
    CHECK(policy.buffer(3).size() == 2);
    CHECK(policy.buffer(1).size() == 2);
    CHECK(policy.buffer(4).size() == 1);
    CHECK(policy.buffer(4).ones() == 0);
}

TEST_CASE("a detection mid-slot drops the remaining positions", "[policies][glrt]") {
    GlrtPolicyOptions options;
    options.detector.delta = 0.01;
    GlrtCascadePolicy policy(options, 4, 3);
    const RecommendationList list{{0, 1, 2}};

    // Item 0 clicks for a while, then stops: the zeros that follow trip the
    // detector on item 0 while it sits at position 0.
    std::size_t t = 1;
    for (; t <= 200; ++t) REQUIRE(policy.update(t, list, click_at(0)) == Restart::None);
    Restart r = Restart::None;
    for (; t <= 400 && r == Restart::None; ++t) r = policy.update(t, list, no_click());
    REQUIRE(r == Restart::Detected);
    const std::size_t fired = t - 1;
    CHECK(policy.last_restart() == fired);
    for (std::size_t l = 0; l < 4; ++l) CHECK(policy.buffer(l).size() == 0);

    // The detection slot is the first at which item 0's buffer crosses the
    // threshold; replay it to confirm.
    ObservationBuffer replay;
    for (std::size_t i = 0; i < 200; ++i) replay.push(true);
    for (std::size_t i = 201; i < fired; ++i) {
        replay.push(false);
        REQUIRE_FALSE(glrt_detect(replay, 0.01));
    }
    replay.push(false);
    CHECK(glrt_detect(replay, 0.01));

    // Exploration restarts its cycle from the new reference slot.
    CHECK(policy.exploration_item(fired + 1) == std::optional<std::size_t>{0});
}

TEST_CASE("GLRT index slots match the stationary policy before any detection",
          "[policies][glrt][property]") {
    for (IndexKind kind : {IndexKind::Ucb, IndexKind::KlUcb}) {
        const EnvironmentSpec spec(6, 2, {{1, 3000, {0.15, 0.4, 0.35, 0.1, 0.05, 0.3}}});
        GlrtPolicyOptions options;
        options.kind = kind;
        options.exploration = 0.05;
        options.detector.delta = 1.0 / 3000;
        GlrtCascadePolicy glrt(options, 6, 2);
        CascadeIndexPolicy plain(kind, 6, 2);
        Rng rng(77);
        std::size_t compared = 0;
        for (std::size_t t = 1; t <= spec.horizon(); ++t) {
            const bool forced = glrt.exploration_item(t).has_value();
            const auto list = glrt.select(t, rng);
            if (!forced) {
                REQUIRE(plain.select(t, rng) == list);
                ++compared;
            }
            const auto out = simulate_click(spec.attraction_at(t), list, rng);
            plain.update(t, list, out.feedback);
            if (glrt.update(t, list, out.feedback) == Restart::Detected) break;
        }
        CHECK(compared > 2500);
    }
}

TEST_CASE("stationary policies start from unobserved items", "[policies][index]") {
    CascadeIndexPolicy policy(IndexKind::Ucb, 4, 2);
    Rng rng(1);
    CHECK(policy.select(1, rng) == RecommendationList{{0, 1}});
    policy.update(1, {{0, 1}}, no_click());
    CHECK(policy.select(2, rng) == RecommendationList{{2, 3}});
    CHECK(policy.count(0) == 1);
    CHECK(policy.mean(0) == 0.0);
    policy.restart(2);
    CHECK(policy.count(0) == 0);
    CHECK(policy.last_restart() == 2);
}

TEST_CASE("DUCB with gamma = 1 keeps plain counts", "[policies][ducb]") {
    DiscountedCascadeUcb ducb(5, 2, 1.0, 0.5);
    CascadeIndexPolicy counts(IndexKind::Ucb, 5, 2);
    Rng rng(8);
    const AttractionVector w = {0.2, 0.5, 0.1, 0.4, 0.3};
    for (std::size_t t = 1; t <= 500; ++t) {
        const auto list = ducb.select(t, rng);
        const auto out = simulate_click(w, list, rng);
        ducb.update(t, list, out.feedback);
        counts.update(t, list, out.feedback);
    }
    for (std::size_t l = 0; l < 5; ++l) {
        CHECK(ducb.discounted_count(l) == static_cast<double>(counts.count(l)));
    }
}

TEST_CASE("DUCB discounts every slot", "[policies][ducb]") {
    DiscountedCascadeUcb ducb(3, 1, 0.5, 0.5);
    ducb.update(1, {{0}}, click_at(0));
    CHECK(ducb.discounted_count(0) == 1.0);
    ducb.update(2, {{1}}, no_click());
    CHECK(ducb.discounted_count(0) == 0.5);
    ducb.update(3, {{1}}, no_click());
    CHECK(ducb.discounted_count(0) == 0.25);
    CHECK(ducb.discounted_count(1) == 1.5);
    CHECK_THROWS_AS(DiscountedCascadeUcb(3, 1, 0.0, 0.5), ValidationError);
    CHECK_THROWS_AS(DiscountedCascadeUcb(3, 1, 0.9, 0.0), ValidationError);
}

TEST_CASE("SWUCB forgets observations older than the window", "[policies][swucb]") {
    SlidingWindowCascadeUcb sw(3, 1, 3, 0.5);
    Rng rng(1);
    sw.update(1, {{0}}, click_at(0));
    sw.update(2, {{0}}, click_at(0));
    sw.select(4, rng);
    CHECK(sw.window_count(0) == 2);
    sw.select(5, rng);
    CHECK(sw.window_count(0) == 1);
    sw.select(6, rng);
    CHECK(sw.window_count(0) == 0);
    CHECK_THROWS_AS(SlidingWindowCascadeUcb(3, 1, 0, 0.5), ValidationError);
}

TEST_CASE("SWUCB with an unbounded window follows CascadeUCB1", "[policies][swucb][property]") {
    // With xi = 3/2 the window index is the UCB1 index.
    SlidingWindowCascadeUcb sw(6, 2, 1'000'000, 1.5);
    CascadeIndexPolicy ucb(IndexKind::Ucb, 6, 2);
    const AttractionVector w = {0.15, 0.4, 0.35, 0.1, 0.05, 0.3};
    Rng rng(12);
    for (std::size_t t = 1; t <= 3000; ++t) {
        const auto a = sw.select(t, rng);
        const auto b = ucb.select(t, rng);
        for (std::size_t l = 0; l < 6; ++l) REQUIRE(sw.window_count(l) == ucb.count(l));
        REQUIRE(a == b);
        const auto out = simulate_click(w, a, rng);
        sw.update(t, a, out.feedback);
        ucb.update(t, a, out.feedback);
    }
}

TEST_CASE("oracle restarts exactly at the change-points", "[policies][oracle]") {
    const EnvironmentSpec spec(4, 2,
                               {{1, 100, {0.1, 0.2, 0.3, 0.4}},
                                {101, 250, {0.4, 0.3, 0.2, 0.1}},
                                {251, 300, {0.1, 0.2, 0.3, 0.4}}});
    const auto params = resolve_params({}, spec);
    auto oracle = make_policy(PolicyKind::OracleCascadeKlUcb, params, spec);
    CHECK(oracle->name() == "Oracle-CascadeKL-UCB");
    Rng rng(2);
    std::vector<std::size_t> restarts;
    for (std::size_t t = 1; t <= spec.horizon(); ++t) {
        const auto list = oracle->select(t, rng);
        const auto out = simulate_click(spec.attraction_at(t), list, rng);
        const Restart r = oracle->update(t, list, out.feedback);
        if (r != Restart::None) {
            CHECK(r == Restart::Scheduled);
            CHECK(oracle->last_restart() == t);
            restarts.push_back(t);
        }
    }
    CHECK(restarts == spec.change_points());
}

TEST_CASE("oracle on a single segment matches its base policy", "[policies][oracle]") {
    const EnvironmentSpec spec(5, 2, {{1, 1000, {0.1, 0.5, 0.3, 0.2, 0.25}}});
    OracleRestart oracle(std::make_unique<CascadeIndexPolicy>(IndexKind::Ucb, 5, 2),
                         spec.change_points());
    CascadeIndexPolicy base(IndexKind::Ucb, 5, 2);
    Rng rng(4);
    for (std::size_t t = 1; t <= spec.horizon(); ++t) {
        const auto a = oracle.select(t, rng);
        REQUIRE(a == base.select(t, rng));
        const auto out = simulate_click(spec.attraction_at(t), a, rng);
        REQUIRE(oracle.update(t, a, out.feedback) == Restart::None);
        base.update(t, a, out.feedback);
    }
}

TEST_CASE("policies are deterministic in their seed", "[policies][property]") {
    const auto spec = make_synthetic(1);
    const auto params = resolve_params({}, spec);
    for (PolicyKind kind : kAllPolicies) {
        auto a = make_policy(kind, params, spec);
        auto b = make_policy(kind, params, spec);
        Rng ra(9), rb(9);
        for (std::size_t t = 1; t <= 3000; ++t) {
            const auto la = a->select(t, ra);
            const auto lb = b->select(t, rb);
            REQUIRE(la == lb);
            const auto oa = simulate_click(spec.attraction_at(t), la, ra);
            const auto ob = simulate_click(spec.attraction_at(t), lb, rb);
            REQUIRE(a->update(t, la, oa.feedback) == b->update(t, lb, ob.feedback));
        }
    }
}

TEST_CASE("policy names", "[policies][factory]") {
    std::set<std::string_view> ids;
    for (PolicyKind kind : kAllPolicies) {
        ids.insert(policy_id(kind));
        CHECK(parse_policy_kind(policy_id(kind)) == kind);
        CHECK(parse_policy_kind(policy_display_name(kind)) == kind);
    }
    CHECK(ids.size() == 8);
    CHECK(parse_policy_kind("GLRT-CASCADEUCB") == PolicyKind::GlrtCascadeUcb);
    CHECK_THROWS_AS(parse_policy_kind("cusum"), ValidationError);

    const auto spec = make_synthetic(1);
    const auto params = resolve_params({}, spec);
    for (PolicyKind kind : kAllPolicies) {
        CHECK(make_policy(kind, params, spec)->name() == policy_display_name(kind));
    }
}

TEST_CASE("default tuning", "[policies][params]") {
    const auto spec = make_synthetic(1);
    const auto p = resolve_params({}, spec);
    CHECK_THAT(p.exploration, WithinAbs(0.006364473616521743, 1e-15));
    CHECK(p.delta == 1.0 / 25000);
    CHECK_THAT(p.gamma, WithinAbs(1.0 - 0.25 / std::sqrt(25000.0), 1e-15));
    CHECK(p.window == 1007);
    CHECK(p.xi == 0.5);

    GlrtPolicyOptions options;
    options.exploration = p.exploration;
    CHECK(GlrtCascadePolicy(options, 10, 3).exploration_cycle() == 1571);

    CHECK_THAT(exploration_rate(ExplorationRule::Corollary, 10, 10, 25000),
               WithinAbs(std::sqrt(100 * std::log(25000.0) / 25000), 1e-15));
    CHECK(exploration_rate(ExplorationRule::Corollary, 10, 10, 20) == 1.0);

    PolicyParams hinted;
    hinted.segments_hint = 40;
    CHECK_THAT(resolve_params(hinted, spec).exploration,
               WithinAbs(0.1 * std::sqrt(40 * std::log(25000.0) / 25000), 1e-15));

    PolicyParams bad;
    bad.delta = 1.0;
    CHECK_THROWS_AS(resolve_params(bad, spec), ValidationError);
    bad.delta.reset();
    bad.exploration = 0.0;
    CHECK_THROWS_AS(resolve_params(bad, spec), ValidationError);
}
