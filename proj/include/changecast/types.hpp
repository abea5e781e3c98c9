#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace changecast {

/// One observation: a value with the time it was observed, seconds since
/// scenario epoch. The atomic unit of every flow in the library.
struct TimeValuePair {
    double timestamp = 0.0;
    double value = 0.0;
};

inline bool is_valid_observation(const TimeValuePair& p) {
    return std::isfinite(p.timestamp) && p.timestamp >= 0.0 && std::isfinite(p.value);
}

enum class TriggerPolicy {
    send_all,
    full_resample,
    post_change_only,
};

/// Per-agent knobs: buffer capacity N, payload cap M, trigger significance
/// level, policy, and the change-point segment guard.
struct AgentConfig {
    std::size_t buffer_capacity = 100;  // N
    std::size_t max_transmit = 20;      // M, <= N
    double alpha = 0.05;
    TriggerPolicy policy = TriggerPolicy::full_resample;
    std::size_t min_seg = 10;
    std::size_t trigger_stride = 1;  // evaluate every k-th observation
};

/// Fixed-probe quantile summary used by the periodic baseline scheme.
/// estimates must be non-decreasing; weight counts absorbed buffer fills.
struct QuantileBuffer {
    std::vector<double> probes;
    std::vector<double> estimates;
    std::uint64_t weight = 0;
};

enum class MessageKind : std::uint8_t {
    full_resample = 0,
    post_change = 1,
    send_all = 2,
    baseline_summary = 3,
};

inline const char* to_string(MessageKind k) {
    switch (k) {
        case MessageKind::full_resample: return "full_resample";
        case MessageKind::post_change: return "post_change";
        case MessageKind::send_all: return "send_all";
        case MessageKind::baseline_summary: return "baseline_summary";
    }
    return "unknown";
}

/// What travels from agent to collector. Carries pairs for the trigger
/// policies or a quantile summary for the baseline, never both.
struct Message {
    std::int32_t agent_id = 0;
    std::uint64_t seq = 0;
    MessageKind kind = MessageKind::full_resample;
    std::vector<TimeValuePair> pairs;
    std::optional<QuantileBuffer> summary;
};

}  // namespace changecast
