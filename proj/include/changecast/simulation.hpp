#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "changecast/agent.hpp"
#include "changecast/baseline.hpp"
#include "changecast/collector.hpp"
#include "changecast/stream.hpp"
#include "changecast/types.hpp"
#include "changecast/wire.hpp"

namespace changecast {

/// Parameters of the periodic summary scheme. When present on a scenario,
/// every agent runs this scheme instead of a trigger policy.
struct BaselineParams {
    std::size_t fill_capacity = 50;  // N_d
    std::vector<double> probes = {0.05, 0.25, 0.5, 0.75, 0.95};
    double update_weight = 0.5;  // w
    double period_seconds = 60.0;
};

struct ScenarioConfig {
    std::size_t num_agents = 1;  // K
    double duration_seconds = 100.0;
    std::vector<double> obs_interval_seconds = {1.0};  // one shared value or one per agent
    AgentConfig agent;
    double window_seconds = 60.0;
    StreamSpec generator;
    std::vector<ChangeSpec> changes;
    std::optional<BaselineParams> baseline;
    std::uint64_t seed = 0;
    double sample_interval_seconds = 10.0;
    double channel_delay_seconds = 0.0;
    std::vector<double> byte_weights;  // empty = 1 everywhere; else one shared or one per agent
};

inline double obs_interval_for(const ScenarioConfig& config, std::size_t agent) {
    return config.obs_interval_seconds.size() == 1 ? config.obs_interval_seconds.front()
                                                   : config.obs_interval_seconds[agent];
}

inline double byte_weight_for(const ScenarioConfig& config, std::size_t agent) {
    if (config.byte_weights.empty()) return 1.0;
    return config.byte_weights.size() == 1 ? config.byte_weights.front()
                                           : config.byte_weights[agent];
}

/// Structural validation; throws invalid_argument naming the offending
/// field(s) so the CLI can surface exact diagnostics.
inline void validate_scenario(const ScenarioConfig& config) {
    const auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    const auto positive = [&](double v, const char* name) {
        if (!(std::isfinite(v) && v > 0.0)) fail(std::string(name) + " must be positive and finite");
    };
    if (config.num_agents == 0) fail("num_agents must be at least 1");
    positive(config.duration_seconds, "duration_seconds");
    positive(config.window_seconds, "window_seconds");
    positive(config.sample_interval_seconds, "sample_interval_seconds");
    if (!(std::isfinite(config.channel_delay_seconds) && config.channel_delay_seconds >= 0.0))
        fail("channel_delay_seconds must be non-negative and finite");
    if (config.obs_interval_seconds.empty())
        fail("obs_interval_seconds must hold one value or one per agent");
    if (config.obs_interval_seconds.size() != 1 &&
        config.obs_interval_seconds.size() != config.num_agents)
        fail("obs_interval_seconds length must be 1 or num_agents");
    for (double v : config.obs_interval_seconds) positive(v, "obs_interval_seconds");

    if (config.agent.buffer_capacity == 0) fail("agent.buffer_capacity must be at least 1");
    if (config.agent.max_transmit == 0) fail("agent.max_transmit must be at least 1");
    if (config.agent.max_transmit > config.agent.buffer_capacity)
        fail("agent.max_transmit exceeds agent.buffer_capacity");
    if (!(config.agent.alpha > 0.0 && config.agent.alpha < 1.0))
        fail("agent.alpha must lie in (0, 1)");
    if (config.agent.min_seg < 2) fail("agent.min_seg must be at least 2");
    if (config.agent.trigger_stride == 0) fail("agent.trigger_stride must be at least 1");
    if (config.agent.policy == TriggerPolicy::send_all && config.agent.trigger_stride != 1)
        fail("agent.trigger_stride must be 1 under the send_all policy");

    validate_stream_spec(config.generator);

    for (const auto& change : config.changes) {
        if (!(change.at_seconds >= 0.0 && change.at_seconds <= config.duration_seconds))
            fail("changes.at_seconds must lie within [0, duration_seconds]");
        if (!std::isfinite(change.magnitude)) fail("changes.magnitude must be finite");
        if (change.affected_agents.empty()) fail("changes.affected_agents must be non-empty");
        for (std::int32_t id : change.affected_agents) {
            if (id < 0 || static_cast<std::size_t>(id) >= config.num_agents)
                fail("changes.affected_agents contains an id outside [0, num_agents)");
        }
    }

    if (config.baseline.has_value()) {
        const auto& b = *config.baseline;
        if (b.fill_capacity == 0) fail("baseline.fill_capacity must be at least 1");
        positive(b.period_seconds, "baseline.period_seconds");
        if (!(b.update_weight > 0.0 && b.update_weight <= 1.0))
            fail("baseline.update_weight must lie in (0, 1]");
        if (b.probes.empty()) fail("baseline.probes must be non-empty");
        for (double p : b.probes) {
            if (!(p > 0.0 && p < 1.0)) fail("baseline.probes must lie strictly in (0, 1)");
        }
        if (!std::is_sorted(b.probes.begin(), b.probes.end()) ||
            std::adjacent_find(b.probes.begin(), b.probes.end()) != b.probes.end())
            fail("baseline.probes must be strictly increasing");
    }

    if (!config.byte_weights.empty() && config.byte_weights.size() != 1 &&
        config.byte_weights.size() != config.num_agents)
        fail("byte_weights length must be 0, 1 or num_agents");
    for (double w : config.byte_weights) positive(w, "byte_weights");
}

/// Ground-truth F_t: ECDF over every generated observation, all agents, with
/// timestamp in the closed window [now - window_seconds, now].
inline stats::EmpiricalCdf oracle_window_cdf(const std::vector<TimeValuePair>& all_pairs,
                                             double now, double window_seconds) {
    std::vector<double> values;
    for (const auto& p : all_pairs) {
        if (p.timestamp >= now - window_seconds && p.timestamp <= now) values.push_back(p.value);
    }
    if (values.empty()) throw std::runtime_error("no data in window");
    return stats::ecdf(values);
}

/// One sent message as the harness saw it; the event log row.
struct SentRecord {
    double send_time = 0.0;
    double deliver_time = 0.0;
    std::int32_t agent_id = 0;
    MessageKind kind = MessageKind::full_resample;
    std::size_t record_count = 0;
    std::uint64_t bytes = 0;
    bool accepted = false;
    bool trigger_fired = false;  // U test caused it (not bootstrap/scheduled)
};

struct EventLog {
    std::vector<SentRecord> sent;
    std::uint64_t trigger_evaluations = 0;
    std::uint64_t observations_total = 0;
    std::vector<std::pair<double, double>> cdf_error_timeline;
    std::vector<double> last_accepted_deliver;  // per agent; -inf when never
};

/// Detection outcome for one injected change.
struct ChangeOutcome {
    double at_seconds = 0.0;
    ChangeKind kind = ChangeKind::level_shift;
    bool detected = false;
    double latency_seconds = 0.0;  // meaningful iff detected
};

struct MetricsReport {
    std::vector<ChangeOutcome> detection;
    std::uint64_t false_alarms = 0;
    std::uint64_t trigger_evaluations = 0;
    double false_alarm_rate = 0.0;
    std::uint64_t messages_total = 0;
    std::uint64_t duplicates_rejected = 0;
    std::uint64_t bytes_total = 0;
    std::vector<std::uint64_t> bytes_per_agent;
    double bytes_weighted_total = 0.0;
    std::vector<std::pair<double, double>> cdf_error_timeline;
    std::uint64_t observations_total = 0;
    std::uint64_t silent_in_window_agents = 0;
};

/// Fold the event log into the final report. The CDF-error timeline is
/// sampled during the run (it needs live collector state) and carried through
/// the log, so the oracle itself is not needed here.
inline MetricsReport compute_metrics(const EventLog& log, const ScenarioConfig& config) {
    MetricsReport report;
    report.trigger_evaluations = log.trigger_evaluations;
    report.observations_total = log.observations_total;
    report.cdf_error_timeline = log.cdf_error_timeline;
    report.bytes_per_agent.assign(config.num_agents, 0);

    for (const auto& rec : log.sent) {
        ++report.messages_total;
        report.bytes_total += rec.bytes;
        report.bytes_per_agent[static_cast<std::size_t>(rec.agent_id)] += rec.bytes;
        report.bytes_weighted_total +=
            static_cast<double>(rec.bytes) *
            byte_weight_for(config, static_cast<std::size_t>(rec.agent_id));
        if (!rec.accepted) ++report.duplicates_rejected;
    }

    // A fired transmission is a false alarm while its agent is still
    // stationary, i.e. strictly before the first change affecting it.
    std::vector<double> first_change(config.num_agents,
                                     std::numeric_limits<double>::infinity());
    for (const auto& change : config.changes) {
        for (std::int32_t id : change.affected_agents) {
            auto& slot = first_change[static_cast<std::size_t>(id)];
            slot = std::min(slot, change.at_seconds);
        }
    }
    for (const auto& rec : log.sent) {
        if (rec.trigger_fired &&
            rec.send_time < first_change[static_cast<std::size_t>(rec.agent_id)])
            ++report.false_alarms;
    }
    report.false_alarm_rate =
        report.trigger_evaluations == 0
            ? 0.0
            : static_cast<double>(report.false_alarms) /
                  static_cast<double>(report.trigger_evaluations);

    for (const auto& change : config.changes) {
        ChangeOutcome outcome;
        outcome.at_seconds = change.at_seconds;
        outcome.kind = change.kind;
        double first_ingest = std::numeric_limits<double>::infinity();
        for (const auto& rec : log.sent) {
            if (rec.accepted && rec.send_time >= change.at_seconds &&
                change_affects(change, rec.agent_id))
                first_ingest = std::min(first_ingest, rec.deliver_time);
        }
        outcome.detected = std::isfinite(first_ingest);
        if (outcome.detected) outcome.latency_seconds = first_ingest - change.at_seconds;
        report.detection.push_back(outcome);
    }

    const double silent_cutoff = config.duration_seconds - config.window_seconds;
    for (std::size_t i = 0; i < config.num_agents; ++i) {
        if (log.last_accepted_deliver[i] < silent_cutoff) ++report.silent_in_window_agents;
    }
    return report;
}

struct SimulationResult {
    MetricsReport metrics;
    EventLog log;
    std::vector<TimeValuePair> oracle_pairs;  // every generated observation, time-ordered
};

namespace detail {

enum SimEventKind : int {
    observe_event = 0,
    deliver_event = 1,
    publish_event = 2,
    sample_event = 3,
};

struct SimEvent {
    double time = 0.0;
    std::int32_t agent = 0;
    int kind = 0;
    std::uint64_t serial = 0;
    std::size_t index = 0;
};

struct SimEventAfter {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        return std::tie(a.time, a.agent, a.kind, a.serial) >
               std::tie(b.time, b.agent, b.kind, b.serial);
    }
};

}  // namespace detail

/// Advance the whole scenario on a single deterministically ordered event
/// queue: ties break by (time, agent, kind precedence, insertion serial),
/// with metric sampling ordered after all agent activity at the same time.
/// Each observation flows observe -> evaluate -> send -> deliver/ingest ->
/// commit; trigger evaluation runs inline with its observation because no
/// other event can legally order between the two.
inline SimulationResult run_scenario(const ScenarioConfig& config) {
    validate_scenario(config);
    const std::size_t K = config.num_agents;
    const bool baseline_mode = config.baseline.has_value();

    std::vector<std::vector<TimeValuePair>> streams(K);
    for (std::size_t i = 0; i < K; ++i) {
        std::vector<double> schedule;
        const double interval = obs_interval_for(config, i);
        for (double t = interval; t <= config.duration_seconds + 1e-9; t += interval)
            schedule.push_back(t);
        streams[i] = generate_stream(config.generator, config.changes,
                                     static_cast<std::int32_t>(i), schedule, config.seed);
    }

    SimulationResult result;
    for (const auto& stream : streams)
        result.oracle_pairs.insert(result.oracle_pairs.end(), stream.begin(), stream.end());
    std::stable_sort(result.oracle_pairs.begin(), result.oracle_pairs.end(),
                     [](const TimeValuePair& a, const TimeValuePair& b) {
                         return a.timestamp < b.timestamp;
                     });

    EventLog& log = result.log;
    log.last_accepted_deliver.assign(K, -std::numeric_limits<double>::infinity());

    std::priority_queue<detail::SimEvent, std::vector<detail::SimEvent>, detail::SimEventAfter>
        queue;
    std::uint64_t serial = 0;
    const auto push = [&](double time, std::int32_t agent, int kind, std::size_t index) {
        queue.push(detail::SimEvent{time, agent, kind, serial++, index});
    };

    for (std::size_t i = 0; i < K; ++i) {
        if (!streams[i].empty())
            push(streams[i][0].timestamp, static_cast<std::int32_t>(i),
                 detail::observe_event, 0);
    }
    if (baseline_mode) {
        const double period = config.baseline->period_seconds;
        for (std::size_t i = 0; i < K; ++i) {
            for (double t = period; t <= config.duration_seconds + 1e-9; t += period)
                push(t, static_cast<std::int32_t>(i), detail::publish_event, 0);
        }
    }
    for (double t = config.sample_interval_seconds; t <= config.duration_seconds + 1e-9;
         t += config.sample_interval_seconds)
        push(t, std::numeric_limits<std::int32_t>::max(), detail::sample_event, 0);

    std::vector<AgentState> agents(K);
    std::vector<DataBuffer> fills(K);
    std::vector<QuantileBuffer> summaries(K);
    std::vector<std::uint64_t> baseline_seq(K, 0);
    for (std::size_t i = 0; i < K; ++i) {
        agents[i].agent_id = static_cast<std::int32_t>(i);
        if (baseline_mode) {
            fills[i].capacity = config.baseline->fill_capacity;
            summaries[i].probes = config.baseline->probes;
        }
    }

    CollectorState collector;
    collector.window_seconds = config.window_seconds;

    std::vector<Message> in_flight;
    const auto send = [&](Message msg, double now, bool fired) {
        SentRecord rec;
        rec.send_time = now;
        rec.deliver_time = now + config.channel_delay_seconds;
        rec.agent_id = msg.agent_id;
        rec.kind = msg.kind;
        rec.record_count = msg.summary.has_value() ? msg.summary->probes.size() : msg.pairs.size();
        rec.bytes = wire::message_bytes(msg);
        rec.trigger_fired = fired;
        log.sent.push_back(rec);
        in_flight.push_back(std::move(msg));
        push(rec.deliver_time, rec.agent_id, detail::deliver_event, in_flight.size() - 1);
    };
    // The deliver event index doubles as the log row index: messages enter
    // log.sent and in_flight together.

    while (!queue.empty()) {
        const detail::SimEvent event = queue.top();
        queue.pop();
        switch (event.kind) {
            case detail::observe_event: {
                const auto agent = static_cast<std::size_t>(event.agent);
                const TimeValuePair pair = streams[agent][event.index];
                ++log.observations_total;
                if (baseline_mode) {
                    buffer_push(fills[agent], summaries[agent], pair.value,
                                config.baseline->update_weight);
                } else {
                    observe(agents[agent], config.agent, pair);
                    if (agents[agent].observed % config.agent.trigger_stride == 0) {
                        const auto decision = evaluate_trigger(agents[agent], config.agent);
                        if (decision.trigger_p.has_value()) ++log.trigger_evaluations;
                        if (decision.kind != DecisionKind::none) {
                            send(select_payload(agents[agent], decision, config.agent),
                                 event.time, decision.trigger_p.has_value());
                        }
                    }
                }
                if (event.index + 1 < streams[agent].size())
                    push(streams[agent][event.index + 1].timestamp, event.agent,
                         detail::observe_event, event.index + 1);
                break;
            }
            case detail::deliver_event: {
                const Message& msg = in_flight[event.index];
                const bool accepted = ingest(collector, msg, event.time);
                log.sent[event.index].accepted = accepted;
                if (accepted) {
                    const auto agent = static_cast<std::size_t>(msg.agent_id);
                    log.last_accepted_deliver[agent] = event.time;
                    if (baseline_mode) {
                        baseline_seq[agent] = msg.seq;
                    } else {
                        commit_report(agents[agent], config.agent, msg);
                    }
                }
                in_flight[event.index] = Message{};  // release payload storage
                break;
            }
            case detail::publish_event: {
                const auto agent = static_cast<std::size_t>(event.agent);
                if (summaries[agent].weight >= 1) {
                    send(publish_summary(summaries[agent], event.agent,
                                         baseline_seq[agent] + 1),
                         event.time, false);
                }
                break;
            }
            case detail::sample_event: {
                const double now = event.time;
                std::vector<double> oracle_values;
                for (const auto& stream : streams) {
                    for (const auto& p : stream) {
                        if (p.timestamp >= now - config.window_seconds && p.timestamp <= now)
                            oracle_values.push_back(p.value);
                    }
                }
                if (oracle_values.empty()) break;  // nothing to estimate yet
                const auto oracle_cdf = stats::ecdf(oracle_values);
                double error = 1.0;  // no estimate at all: maximal sup gap
                if (baseline_mode) {
                    std::vector<QuantileBuffer> received;
                    for (const auto& [id, summary] : collector.per_agent_summary)
                        received.push_back(summary);
                    if (!received.empty())
                        error = summary_ks_distance(aggregate_summaries(received), oracle_cdf);
                } else if (has_window_data(collector, now)) {
                    error = stats::ks_distance(window_cdf(collector, now), oracle_cdf);
                }
                log.cdf_error_timeline.emplace_back(now, error);
                break;
            }
            default: break;
        }
    }

    result.metrics = compute_metrics(log, config);
    return result;
}

}  // namespace changecast
