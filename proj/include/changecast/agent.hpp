#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "changecast/stats.hpp"
#include "changecast/types.hpp"

namespace changecast {

enum class DecisionKind {
    none,
    full_resample,
    post_change,
};

/// Outcome of one trigger evaluation. trigger_p is set whenever the U test
/// actually ran (fired or not); split_index only when a change point was
/// located.
struct TransmissionDecision {
    DecisionKind kind = DecisionKind::none;
    std::vector<TimeValuePair> selected;  // empty iff kind == none
    std::optional<double> trigger_p;
    std::optional<std::size_t> split_index;
};

/// Everything one agent remembers: the last-N ring, the multiset of pairs the
/// server currently holds for it, and message/observation counters.
struct AgentState {
    std::int32_t agent_id = 0;
    std::deque<TimeValuePair> buffer;          // oldest first, size <= N
    std::vector<TimeValuePair> last_reported;  // timestamp-ordered server view
    std::uint64_t seq = 0;
    std::uint64_t observed = 0;      // lifetime observation count
    std::uint64_t sent_through = 0;  // observations covered by send_all commits
};

inline void observe(AgentState& state, const AgentConfig& config, TimeValuePair pair) {
    if (!is_valid_observation(pair)) throw std::invalid_argument("invalid observation");
    if (!state.buffer.empty() && pair.timestamp < state.buffer.back().timestamp)
        throw std::invalid_argument("time regression");
    state.buffer.push_back(pair);
    if (state.buffer.size() > config.buffer_capacity) state.buffer.pop_front();
    ++state.observed;
}

/// Index-even subset of up to m pairs: the k-th pick sits at index
/// ceil((k+1)*n/m) - 1, so the newest pair is always included and the picks
/// span the whole buffer.
inline std::vector<TimeValuePair> select_evenly_spaced(const std::deque<TimeValuePair>& buffer,
                                                       std::size_t m) {
    const std::size_t n = buffer.size();
    m = std::min(m, n);
    std::vector<TimeValuePair> out;
    out.reserve(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t index = ((k + 1) * n + m - 1) / m - 1;
        out.push_back(buffer[index]);
    }
    return out;
}

/// The newest min(m, n - split) pairs at indices >= split.
inline std::vector<TimeValuePair> select_post_change(const std::deque<TimeValuePair>& buffer,
                                                     std::size_t split, std::size_t m) {
    const std::size_t count = std::min(m, buffer.size() - split);
    return {buffer.end() - static_cast<std::ptrdiff_t>(count), buffer.end()};
}

namespace detail {

inline std::vector<double> buffer_values(const AgentState& state) {
    std::vector<double> v;
    v.reserve(state.buffer.size());
    for (const auto& p : state.buffer) v.push_back(p.value);
    return v;
}

inline std::vector<double> reported_values(const AgentState& state) {
    std::vector<double> v;
    v.reserve(state.last_reported.size());
    for (const auto& p : state.last_reported) v.push_back(p.value);
    return v;
}

}  // namespace detail

/// Pure decision function. send_all ships every not-yet-sent pair; the other
/// policies stay silent until the buffer's distribution departs from
/// last_reported per the U test, with post_change_only additionally locating
/// the change point and restricting the payload to post-split pairs.
inline TransmissionDecision evaluate_trigger(const AgentState& state, const AgentConfig& config) {
    TransmissionDecision decision;
    if (config.policy == TriggerPolicy::send_all) {
        if (state.buffer.empty() || state.sent_through >= state.observed) return decision;
        const std::size_t unsent = static_cast<std::size_t>(state.observed - state.sent_through);
        decision.kind = DecisionKind::full_resample;
        decision.selected = {state.buffer.end() -
                                 static_cast<std::ptrdiff_t>(std::min(
                                     {unsent, state.buffer.size(), config.max_transmit})),
                             state.buffer.end()};
        return decision;
    }
    if (state.last_reported.empty()) {
        // The server cannot detect change from nothing: the first full buffer
        // forces a bootstrap report.
        if (state.buffer.size() < config.buffer_capacity) return decision;
        decision.kind = DecisionKind::full_resample;
        decision.selected = select_evenly_spaced(state.buffer, config.max_transmit);
        return decision;
    }
    if (state.buffer.size() < 2) return decision;  // insufficient evidence

    const auto test = stats::mann_whitney_u(detail::buffer_values(state),
                                            detail::reported_values(state));
    decision.trigger_p = test.p_two_sided;
    if (test.p_two_sided >= config.alpha) return decision;

    if (config.policy == TriggerPolicy::post_change_only) {
        const auto cp =
            stats::change_point_scan(detail::buffer_values(state), config.min_seg, config.alpha);
        if (cp.has_value()) {
            decision.kind = DecisionKind::post_change;
            decision.split_index = cp->split_index;
            decision.selected =
                select_post_change(state.buffer, cp->split_index, config.max_transmit);
            return decision;
        }
        // U test fired but no split was located: fall through to a full
        // resample so the server still learns the new distribution.
    }
    decision.kind = DecisionKind::full_resample;
    decision.selected = select_evenly_spaced(state.buffer, config.max_transmit);
    return decision;
}

inline Message select_payload(const AgentState& state, const TransmissionDecision& decision,
                              const AgentConfig& config) {
    if (decision.kind == DecisionKind::none) throw std::invalid_argument("nothing to send");
    Message msg;
    msg.agent_id = state.agent_id;
    msg.seq = state.seq + 1;
    if (config.policy == TriggerPolicy::send_all) {
        msg.kind = MessageKind::send_all;
    } else {
        msg.kind = decision.kind == DecisionKind::post_change ? MessageKind::post_change
                                                              : MessageKind::full_resample;
    }
    msg.pairs = decision.selected;
    return msg;
}

/// Close the loop after a transmission: full resamples replace the server's
/// view, incremental kinds append to it and keep only the newest N pairs.
inline void commit_report(AgentState& state, const AgentConfig& config, const Message& msg) {
    state.seq = msg.seq;
    if (msg.kind == MessageKind::full_resample) {
        state.last_reported = msg.pairs;
        return;
    }
    // Everything observed up to this commit is covered; pairs evicted before
    // they could ship are abandoned rather than re-sent.
    if (msg.kind == MessageKind::send_all) state.sent_through = state.observed;
    state.last_reported.insert(state.last_reported.end(), msg.pairs.begin(), msg.pairs.end());
    std::stable_sort(
        state.last_reported.begin(), state.last_reported.end(),
        [](const TimeValuePair& a, const TimeValuePair& b) { return a.timestamp < b.timestamp; });
    if (state.last_reported.size() > config.buffer_capacity) {
        state.last_reported.erase(
            state.last_reported.begin(),
            state.last_reported.end() - static_cast<std::ptrdiff_t>(config.buffer_capacity));
    }
}

}  // namespace changecast
