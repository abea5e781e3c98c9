#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "changecast/stats.hpp"
#include "changecast/types.hpp"

namespace changecast {

/// Server-side store: per-agent time-ordered pairs inside a sliding window,
/// per-agent sequence tracking, and the latest quantile summary per agent for
/// the periodic baseline scheme.
struct CollectorState {
    double window_seconds = 60.0;
    std::map<std::int32_t, std::vector<TimeValuePair>> per_agent;
    std::map<std::int32_t, std::uint64_t> per_agent_seq;
    std::map<std::int32_t, QuantileBuffer> per_agent_summary;
};

/// Merge a message into the store and evict pairs that fell out of the
/// window. Returns false for a duplicate or reordered sequence number; the
/// store is untouched and the caller counts the rejection.
inline bool ingest(CollectorState& state, const Message& msg, double now) {
    const auto seen = state.per_agent_seq.find(msg.agent_id);
    if (seen != state.per_agent_seq.end() && msg.seq <= seen->second) return false;
    state.per_agent_seq[msg.agent_id] = msg.seq;

    if (msg.summary.has_value()) {
        state.per_agent_summary[msg.agent_id] = *msg.summary;
        return true;
    }
    auto& store = state.per_agent[msg.agent_id];
    store.insert(store.end(), msg.pairs.begin(), msg.pairs.end());
    std::stable_sort(
        store.begin(), store.end(),
        [](const TimeValuePair& a, const TimeValuePair& b) { return a.timestamp < b.timestamp; });
    const double cutoff = now - state.window_seconds;
    store.erase(store.begin(),
                std::find_if(store.begin(), store.end(),
                             [&](const TimeValuePair& p) { return p.timestamp >= cutoff; }));
    return true;
}

inline bool has_window_data(const CollectorState& state, double now) {
    const double cutoff = now - state.window_seconds;
    for (const auto& [agent_id, store] : state.per_agent) {
        for (const auto& p : store) {
            if (p.timestamp >= cutoff && p.timestamp <= now) return true;
        }
    }
    return false;
}

/// ECDF of every stored value with timestamp in the closed window
/// [now - window_seconds, now], across all agents.
inline stats::EmpiricalCdf window_cdf(const CollectorState& state, double now) {
    const double cutoff = now - state.window_seconds;
    std::vector<double> values;
    for (const auto& [agent_id, store] : state.per_agent) {
        for (const auto& p : store) {
            if (p.timestamp >= cutoff && p.timestamp <= now) values.push_back(p.value);
        }
    }
    if (values.empty()) throw std::runtime_error("no data in window");
    return stats::ecdf(values);
}

}  // namespace changecast
