#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "changecast/agent.hpp"
#include "changecast/stats.hpp"
#include "changecast/types.hpp"

using namespace changecast;

namespace {

// Test-local normal source: explicit Box-Muller over the standard-mandated
// mt19937_64 stream so every draw is bit-reproducible.
class NormalSource {
  public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 1.0) / 9007199254740993.0;
    }

    std::mt19937_64 engine_;
};

AgentState state_with_values(const std::vector<double>& buffer_values,
                             const std::vector<double>& reported_values,
                             const AgentConfig& config) {
    AgentState state;
    double t = 0.0;
    for (double v : buffer_values) observe(state, config, {t += 1.0, v});
    for (double v : reported_values) state.last_reported.push_back({t += 1.0, v});
    return state;
}

std::vector<double> timestamps_of(const std::vector<TimeValuePair>& pairs) {
    std::vector<double> out;
    for (const auto& p : pairs) out.push_back(p.timestamp);
    return out;
}

}  // namespace

TEST_CASE("observe keeps the newest N pairs in arrival order", "[agent][observe]") {
    AgentConfig config;
    config.buffer_capacity = 3;
    AgentState state;

    observe(state, config, {0.0, 5.0});
    REQUIRE(state.buffer.size() == 1);
    CHECK(state.buffer.front().value == 5.0);

    observe(state, config, {1.0, 6.0});
    observe(state, config, {2.0, 7.0});
    observe(state, config, {3.0, 8.0});
    REQUIRE(state.buffer.size() == 3);
    CHECK(state.buffer.front().timestamp == 1.0);
    CHECK(state.buffer.back().timestamp == 3.0);
    CHECK(state.observed == 4);
}

TEST_CASE("observe rejects invalid pairs", "[agent][observe]") {
    AgentConfig config;
    AgentState state;
    observe(state, config, {5.0, 1.0});

    CHECK_THROWS_WITH(observe(state, config, {4.0, 1.0}), "time regression");
    CHECK_THROWS_WITH(observe(state, config, {6.0, std::nan("")}), "invalid observation");
    CHECK_THROWS_WITH(observe(state, config, {-1.0, 1.0}), "invalid observation");
    CHECK_THROWS_WITH(
        observe(state, config, {7.0, std::numeric_limits<double>::infinity()}),
        "invalid observation");
    CHECK(state.buffer.size() == 1);
}

TEST_CASE("even-spaced selection spans the buffer and includes the newest pair",
          "[agent][select]") {
    AgentConfig config;
    config.buffer_capacity = 8;
    AgentState state;
    for (int i = 0; i < 8; ++i) observe(state, config, {static_cast<double>(i), i * 10.0});

    SECTION("M = N selects everything") {
        const auto picks = select_evenly_spaced(state.buffer, 8);
        CHECK(timestamps_of(picks) == std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7});
    }
    SECTION("M = 4 picks indices {1,3,5,7}") {
        const auto picks = select_evenly_spaced(state.buffer, 4);
        CHECK(timestamps_of(picks) == std::vector<double>{1, 3, 5, 7});
    }
    SECTION("M larger than the buffer degrades to all pairs") {
        const auto picks = select_evenly_spaced(state.buffer, 20);
        CHECK(picks.size() == 8);
    }
    SECTION("newest pair is always included") {
        for (std::size_t m = 1; m <= 10; ++m) {
            const auto picks = select_evenly_spaced(state.buffer, m);
            REQUIRE_FALSE(picks.empty());
            CHECK(picks.back().timestamp == 7.0);
            CHECK(picks.size() == std::min<std::size_t>(m, 8));
        }
    }
}

TEST_CASE("post-change selection takes the newest post-split pairs", "[agent][select]") {
    AgentConfig config;
    config.buffer_capacity = 8;
    AgentState state;
    for (int i = 0; i < 8; ++i) observe(state, config, {static_cast<double>(i), i * 10.0});

    const auto picks = select_post_change(state.buffer, 6, 4);
    CHECK(timestamps_of(picks) == std::vector<double>{6, 7});

    CHECK(select_post_change(state.buffer, 2, 4).size() == 4);
    CHECK(timestamps_of(select_post_change(state.buffer, 2, 4)) ==
          std::vector<double>{4, 5, 6, 7});
}

TEST_CASE("send_all ships each new pair exactly once", "[agent][trigger]") {
    AgentConfig config;
    config.policy = TriggerPolicy::send_all;
    AgentState state;

    CHECK(evaluate_trigger(state, config).kind == DecisionKind::none);

    observe(state, config, {1.0, 3.5});
    auto decision = evaluate_trigger(state, config);
    REQUIRE(decision.kind == DecisionKind::full_resample);
    REQUIRE(decision.selected.size() == 1);
    CHECK(decision.selected[0].timestamp == 1.0);
    CHECK_FALSE(decision.trigger_p.has_value());

    const Message msg = select_payload(state, decision, config);
    CHECK(msg.kind == MessageKind::send_all);
    commit_report(state, config, msg);
    CHECK(evaluate_trigger(state, config).kind == DecisionKind::none);

    observe(state, config, {2.0, 4.5});
    observe(state, config, {3.0, 5.5});
    decision = evaluate_trigger(state, config);
    REQUIRE(decision.selected.size() == 2);
    CHECK(decision.selected[0].timestamp == 2.0);
    CHECK(decision.selected[1].timestamp == 3.0);
}

TEST_CASE("first full buffer forces a bootstrap report", "[agent][trigger]") {
    AgentConfig config;
    config.buffer_capacity = 10;
    config.max_transmit = 4;
    for (TriggerPolicy policy : {TriggerPolicy::full_resample, TriggerPolicy::post_change_only}) {
        config.policy = policy;
        AgentState state;
        for (int i = 0; i < 9; ++i) observe(state, config, {static_cast<double>(i), i * 1.0});
        CHECK(evaluate_trigger(state, config).kind == DecisionKind::none);

        observe(state, config, {9.0, 9.0});
        const auto decision = evaluate_trigger(state, config);
        CHECK(decision.kind == DecisionKind::full_resample);
        CHECK(decision.selected.size() == 4);
        CHECK_FALSE(decision.trigger_p.has_value());  // no test ran, forced report
    }
}

TEST_CASE("a buffer matching the last report stays silent", "[agent][trigger]") {
    const std::vector<double> values = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0};
    for (TriggerPolicy policy : {TriggerPolicy::full_resample, TriggerPolicy::post_change_only}) {
        AgentConfig config;
        config.buffer_capacity = 8;
        config.policy = policy;
        std::vector<double> reported = values;
        std::reverse(reported.begin(), reported.end());  // multiset equality is what matters
        const AgentState state = state_with_values(values, reported, config);

        const auto decision = evaluate_trigger(state, config);
        CHECK(decision.kind == DecisionKind::none);
        REQUIRE(decision.trigger_p.has_value());
        CHECK(*decision.trigger_p == 1.0);
    }
}

TEST_CASE("fewer than two buffered values is insufficient evidence", "[agent][trigger]") {
    AgentConfig config;
    const AgentState state = state_with_values({1.0}, {2.0, 3.0, 4.0}, config);
    const auto decision = evaluate_trigger(state, config);
    CHECK(decision.kind == DecisionKind::none);
    CHECK_FALSE(decision.trigger_p.has_value());
}

TEST_CASE("a shifted buffer fires the trigger and locates the change point",
          "[agent][trigger]") {
    // Buffer: 20 null draws then 20 draws shifted by ten interquartile ranges;
    // last_reported: 40 draws from the null distribution.
    NormalSource normal(20240213);
    AgentConfig config;
    config.buffer_capacity = 40;
    config.max_transmit = 20;
    config.policy = TriggerPolicy::post_change_only;
    config.min_seg = 10;

    std::vector<double> buffer_values, reported_values;
    for (int i = 0; i < 20; ++i) buffer_values.push_back(normal());
    const double ten_iqr = 10.0 * 1.349;
    for (int i = 0; i < 20; ++i) buffer_values.push_back(normal() + ten_iqr);
    for (int i = 0; i < 40; ++i) reported_values.push_back(normal());

    const AgentState state = state_with_values(buffer_values, reported_values, config);
    const auto decision = evaluate_trigger(state, config);

    REQUIRE(decision.kind == DecisionKind::post_change);
    REQUIRE(decision.split_index.has_value());
    CHECK(*decision.split_index >= 17);
    CHECK(*decision.split_index <= 23);
    CHECK(decision.selected.size() ==
          std::min<std::size_t>(20, 40 - *decision.split_index));
    REQUIRE(decision.trigger_p.has_value());
    CHECK(*decision.trigger_p < 0.05);

    // Independent oracle: maximize |z| over splits by running the two-sample
    // test on each prefix/suffix directly.
    double best_z = -1.0;
    std::size_t best_split = 0;
    for (std::size_t s = 10; s + 10 <= buffer_values.size(); ++s) {
        const std::vector<double> pre(buffer_values.begin(),
                                      buffer_values.begin() + static_cast<std::ptrdiff_t>(s));
        const std::vector<double> post(buffer_values.begin() + static_cast<std::ptrdiff_t>(s),
                                       buffer_values.end());
        const double abs_z = std::abs(stats::mann_whitney_u(pre, post).z);
        if (abs_z > best_z) {
            best_z = abs_z;
            best_split = s;
        }
    }
    CHECK(*decision.split_index == best_split);
}

TEST_CASE("uniformly shifted buffer falls back to a full resample", "[agent][trigger]") {
    // Every buffered value moved: the U test fires but no within-buffer split
    // exists, so the agent sends an even-spaced resample instead.
    NormalSource normal(7);
    AgentConfig config;
    config.buffer_capacity = 40;
    config.max_transmit = 10;
    config.policy = TriggerPolicy::post_change_only;

    std::vector<double> buffer_values, reported_values;
    for (int i = 0; i < 40; ++i) buffer_values.push_back(normal() + 50.0);
    for (int i = 0; i < 40; ++i) reported_values.push_back(normal());

    const AgentState state = state_with_values(buffer_values, reported_values, config);
    const auto decision = evaluate_trigger(state, config);
    CHECK(decision.kind == DecisionKind::full_resample);
    CHECK_FALSE(decision.split_index.has_value());
    CHECK(decision.selected.size() == 10);
}

TEST_CASE("null calibration: trigger rate stays near alpha", "[agent][trigger][property]") {
    // 2000 independent evaluations under the null; 3-sigma binomial band
    // around alpha = 0.05 is [0.035381, 0.064619].
    NormalSource normal(99);
    AgentConfig config;
    config.buffer_capacity = 100;
    config.policy = TriggerPolicy::full_resample;

    int fired = 0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> buffer_values, reported_values;
        for (int i = 0; i < 100; ++i) buffer_values.push_back(normal());
        for (int i = 0; i < 100; ++i) reported_values.push_back(normal());
        const AgentState state = state_with_values(buffer_values, reported_values, config);
        if (evaluate_trigger(state, config).kind != DecisionKind::none) ++fired;
    }
    const double rate = static_cast<double>(fired) / reps;
    CHECK(rate > 0.035381);
    CHECK(rate < 0.064619);
}

TEST_CASE("payload bounds hold across random states", "[agent][select][property]") {
    NormalSource normal(4242);
    std::mt19937_64 engine(4242);
    for (int rep = 0; rep < 200; ++rep) {
        AgentConfig config;
        config.buffer_capacity = 10 + engine() % 50;
        config.max_transmit = 1 + engine() % config.buffer_capacity;
        const std::size_t n = 2 + engine() % config.buffer_capacity;

        std::vector<double> buffer_values, reported_values;
        for (std::size_t i = 0; i < n; ++i) buffer_values.push_back(normal() + 30.0);
        for (std::size_t i = 0; i < n; ++i) reported_values.push_back(normal());
        const AgentState state = state_with_values(buffer_values, reported_values, config);

        const auto full = select_evenly_spaced(state.buffer, config.max_transmit);
        CHECK(full.size() <= config.max_transmit);
        for (std::size_t split = 0; split < n; ++split) {
            const auto post = select_post_change(state.buffer, split, config.max_transmit);
            CHECK(post.size() <= config.max_transmit);
            CHECK(post.size() <= full.size());
        }

        for (TriggerPolicy policy :
             {TriggerPolicy::full_resample, TriggerPolicy::post_change_only}) {
            config.policy = policy;
            const auto decision = evaluate_trigger(state, config);
            CHECK(decision.selected.size() <= config.max_transmit);
            CHECK((decision.kind == DecisionKind::none) == decision.selected.empty());
        }
    }
}

TEST_CASE("shifting the buffer upward never lowers the trigger z", "[agent][property]") {
    // Rank evidence is monotone in a uniform shift: the signed z never
    // decreases, and |z| never decreases once z is non-negative.
    NormalSource normal(1234);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> buffer_values, reported_values;
        for (int i = 0; i < 30; ++i) buffer_values.push_back(normal());
        for (int i = 0; i < 30; ++i) reported_values.push_back(normal());

        double previous_z = -std::numeric_limits<double>::infinity();
        for (double shift : {0.0, 0.25, 0.5, 1.0, 2.0, 5.0}) {
            std::vector<double> shifted = buffer_values;
            for (double& v : shifted) v += shift;
            const double z = stats::mann_whitney_u(shifted, reported_values).z;
            CHECK(z >= previous_z);
            if (previous_z >= 0.0) CHECK(std::abs(z) >= std::abs(previous_z));
            previous_z = z;
        }
    }
}

TEST_CASE("evaluate_trigger is a pure function of state and config", "[agent][property]") {
    NormalSource normal(31);
    AgentConfig config;
    config.buffer_capacity = 30;
    config.policy = TriggerPolicy::post_change_only;
    std::vector<double> buffer_values, reported_values;
    for (int i = 0; i < 15; ++i) buffer_values.push_back(normal());
    for (int i = 0; i < 15; ++i) buffer_values.push_back(normal() + 8.0);
    for (int i = 0; i < 30; ++i) reported_values.push_back(normal());
    const AgentState state = state_with_values(buffer_values, reported_values, config);

    const auto first = evaluate_trigger(state, config);
    const auto second = evaluate_trigger(state, config);
    CHECK(first.kind == second.kind);
    CHECK(first.trigger_p == second.trigger_p);
    CHECK(first.split_index == second.split_index);
    REQUIRE(first.selected.size() == second.selected.size());
    for (std::size_t i = 0; i < first.selected.size(); ++i) {
        CHECK(first.selected[i].timestamp == second.selected[i].timestamp);
        CHECK(first.selected[i].value == second.selected[i].value);
    }
}

TEST_CASE("select_payload wraps the decision with identity and next seq", "[agent][payload]") {
    AgentConfig config;
    config.buffer_capacity = 8;
    AgentState state;
    state.agent_id = 12;
    state.seq = 41;
    for (int i = 0; i < 8; ++i) observe(state, config, {static_cast<double>(i), i + 0.5});
    TransmissionDecision decision;
    decision.kind = DecisionKind::full_resample;
    decision.selected = select_evenly_spaced(state.buffer, 4);

    const Message msg = select_payload(state, decision, config);
    CHECK(msg.agent_id == 12);
    CHECK(msg.seq == 42);
    CHECK(msg.kind == MessageKind::full_resample);
    CHECK(msg.pairs.size() == 4);

    TransmissionDecision none;
    CHECK_THROWS_WITH(select_payload(state, none, config), "nothing to send");
}

TEST_CASE("commit_report replaces on full resample and appends on post change",
          "[agent][commit]") {
    AgentConfig config;
    config.buffer_capacity = 4;
    AgentState state;

    Message full;
    full.seq = 1;
    full.kind = MessageKind::full_resample;
    full.pairs = {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
    commit_report(state, config, full);
    REQUIRE(state.last_reported.size() == 3);
    CHECK(state.seq == 1);

    Message incremental;
    incremental.seq = 2;
    incremental.kind = MessageKind::post_change;
    incremental.pairs = {{9.0, 9.0}};
    commit_report(state, config, incremental);
    REQUIRE(state.last_reported.size() == 4);
    CHECK(state.last_reported.back().value == 9.0);
    CHECK(state.last_reported.front().value == 1.0);

    Message overflow;
    overflow.seq = 3;
    overflow.kind = MessageKind::post_change;
    overflow.pairs = {{10.0, 10.0}};
    commit_report(state, config, overflow);
    REQUIRE(state.last_reported.size() == 4);  // capacity N
    CHECK(state.last_reported.front().value == 2.0);
    CHECK(state.last_reported.back().value == 10.0);

    Message replace;
    replace.seq = 4;
    replace.kind = MessageKind::full_resample;
    replace.pairs = {{11.0, 7.0}};
    commit_report(state, config, replace);
    REQUIRE(state.last_reported.size() == 1);
    CHECK(state.last_reported[0].value == 7.0);
    CHECK(state.seq == 4);
}
