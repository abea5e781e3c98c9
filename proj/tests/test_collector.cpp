#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "changecast/collector.hpp"
#include "changecast/stats.hpp"
#include "changecast/types.hpp"

using namespace changecast;

namespace {

Message data_message(std::int32_t agent_id, std::uint64_t seq,
                     std::vector<TimeValuePair> pairs) {
    Message msg;
    msg.agent_id = agent_id;
    msg.seq = seq;
    msg.kind = MessageKind::full_resample;
    msg.pairs = std::move(pairs);
    return msg;
}

}  // namespace

TEST_CASE("ingest stores pairs inside the window", "[collector][ingest]") {
    CollectorState state;
    state.window_seconds = 10.0;
    CHECK(ingest(state, data_message(0, 1, {{1.0, 0.1}, {2.0, 0.2}, {3.0, 0.3}}), 3.0));
    REQUIRE(state.per_agent.at(0).size() == 3);
    CHECK(state.per_agent_seq.at(0) == 1);
}

TEST_CASE("ingest evicts pairs older than the window", "[collector][ingest]") {
    CollectorState state;
    state.window_seconds = 5.0;
    CHECK(ingest(state, data_message(0, 1, {{1.0, 1.0}}), 1.0));
    CHECK(ingest(state, data_message(0, 2, {{7.0, 7.0}}), 7.0));
    REQUIRE(state.per_agent.at(0).size() == 1);
    CHECK(state.per_agent.at(0).front().timestamp == 7.0);
}

TEST_CASE("ingest rejects duplicate or reordered sequence numbers", "[collector][ingest]") {
    CollectorState state;
    CHECK(ingest(state, data_message(0, 4, {{1.0, 1.0}}), 1.0));
    CHECK_FALSE(ingest(state, data_message(0, 4, {{2.0, 2.0}}), 2.0));
    CHECK_FALSE(ingest(state, data_message(0, 3, {{3.0, 3.0}}), 3.0));
    CHECK(state.per_agent.at(0).size() == 1);
    CHECK(state.per_agent_seq.at(0) == 4);

    // Sequences are tracked per agent, so another agent's seq 4 is fresh.
    CHECK(ingest(state, data_message(1, 4, {{2.0, 2.0}}), 2.0));
}

TEST_CASE("ingest keeps per-agent stores time-ordered", "[collector][ingest]") {
    CollectorState state;
    state.window_seconds = 100.0;
    CHECK(ingest(state, data_message(0, 1, {{5.0, 5.0}, {9.0, 9.0}}), 9.0));
    CHECK(ingest(state, data_message(0, 2, {{3.0, 3.0}, {7.0, 7.0}}), 9.0));
    const auto& store = state.per_agent.at(0);
    REQUIRE(store.size() == 4);
    CHECK(std::is_sorted(store.begin(), store.end(),
                         [](const TimeValuePair& a, const TimeValuePair& b) {
                             return a.timestamp < b.timestamp;
                         }));
}

TEST_CASE("ingest routes summaries to the summary store", "[collector][ingest]") {
    CollectorState state;
    Message msg;
    msg.agent_id = 2;
    msg.seq = 1;
    msg.kind = MessageKind::baseline_summary;
    msg.summary = QuantileBuffer{{0.5}, {4.0}, 3};
    CHECK(ingest(state, msg, 10.0));
    CHECK(state.per_agent.empty());
    REQUIRE(state.per_agent_summary.count(2) == 1);
    CHECK(state.per_agent_summary.at(2).estimates == std::vector<double>{4.0});
    CHECK_FALSE(ingest(state, msg, 11.0));  // same seq
}

TEST_CASE("window_cdf merges all agents over the closed window", "[collector][query]") {
    CollectorState state;
    state.window_seconds = 100.0;

    SECTION("single agent, values 1..10") {
        std::vector<TimeValuePair> pairs;
        for (int i = 1; i <= 10; ++i) pairs.push_back({static_cast<double>(i), double(i)});
        ingest(state, data_message(0, 1, pairs), 10.0);
        const auto cdf = window_cdf(state, 10.0);
        CHECK(cdf(5.0) == 0.5);
    }
    SECTION("two agents with stores {1,2} and {3,4}") {
        ingest(state, data_message(0, 1, {{1.0, 1.0}, {2.0, 2.0}}), 4.0);
        ingest(state, data_message(1, 1, {{3.0, 3.0}, {4.0, 4.0}}), 4.0);
        const auto cdf = window_cdf(state, 4.0);
        CHECK(cdf(2.0) == 0.5);
    }
    SECTION("data entirely older than the window is an error") {
        state.window_seconds = 5.0;
        ingest(state, data_message(0, 1, {{1.0, 1.0}}), 1.0);
        CHECK_THROWS_WITH(window_cdf(state, 50.0), "no data in window");
    }
    SECTION("window boundary is inclusive") {
        state.window_seconds = 5.0;
        ingest(state, data_message(0, 1, {{10.0, 1.0}}), 10.0);
        CHECK_NOTHROW(window_cdf(state, 15.0));
        CHECK_THROWS_WITH(window_cdf(state, 15.0001), "no data in window");
    }
}

TEST_CASE("quantile queries follow the nearest-rank convention", "[collector][query]") {
    const auto cdf = stats::ecdf({1.0, 2.0, 3.0, 4.0});
    CHECK(stats::quantile(cdf, 0.5) == 2.0);
    CHECK(stats::quantile(cdf, 1.0) == 4.0);
    CHECK(stats::quantile(cdf, 0.0) == 1.0);
}

TEST_CASE("ingesting every observation reproduces the oracle exactly",
          "[collector][property]") {
    std::mt19937_64 engine(555);
    CollectorState state;
    state.window_seconds = 50.0;
    std::vector<TimeValuePair> everything;
    std::uint64_t seq = 0;
    for (int i = 0; i < 400; ++i) {
        const double t = 0.25 * static_cast<double>(i);
        const TimeValuePair pair{t, static_cast<double>(engine() % 1000) / 10.0};
        everything.push_back(pair);
        ingest(state, data_message(i % 4, ++seq, {pair}), t);
    }
    const double now = everything.back().timestamp;
    std::vector<double> oracle_values;
    for (const auto& p : everything) {
        if (p.timestamp >= now - state.window_seconds) oracle_values.push_back(p.value);
    }
    const auto oracle = stats::ecdf(oracle_values);
    const auto estimate = window_cdf(state, now);
    CHECK(stats::ks_distance(estimate, oracle) == 0.0);
}

TEST_CASE("ingest order across agents does not matter", "[collector][property]") {
    const Message a = data_message(0, 1, {{1.0, 5.0}, {2.0, 1.0}});
    const Message b = data_message(1, 1, {{1.5, 3.0}, {2.5, 9.0}});

    CollectorState forward, reversed;
    forward.window_seconds = reversed.window_seconds = 10.0;
    ingest(forward, a, 3.0);
    ingest(forward, b, 3.0);
    ingest(reversed, b, 3.0);
    ingest(reversed, a, 3.0);

    CHECK(window_cdf(forward, 3.0).sorted_values() == window_cdf(reversed, 3.0).sorted_values());
}

TEST_CASE("no evicted value ever contributes to a query", "[collector][property]") {
    std::mt19937_64 engine(777);
    CollectorState state;
    state.window_seconds = 20.0;
    std::uint64_t seq = 0;
    for (int i = 0; i < 300; ++i) {
        const double t = static_cast<double>(i);
        ingest(state, data_message(i % 3, ++seq, {{t, t}}), t);  // value == timestamp
        if (i > 0 && i % 50 == 0) {
            const auto cdf = window_cdf(state, t);
            CHECK(cdf.min() >= t - state.window_seconds);
            CHECK(cdf.max() <= t);
        }
    }
}

TEST_CASE("quantile and cdf are mutually consistent", "[collector][property]") {
    std::mt19937_64 engine(888);
    std::vector<double> values;
    for (int i = 0; i < 64; ++i) values.push_back(static_cast<double>(engine() % 97));
    const auto cdf = stats::ecdf(values);

    for (double v : values) {
        CHECK(stats::quantile(cdf, cdf(v)) <= v);
    }
    for (double p : {0.0, 0.1, 0.25, 0.33, 0.5, 0.66, 0.75, 0.9, 1.0}) {
        CHECK(cdf(stats::quantile(cdf, p)) >= p);
    }
}
