#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "changecast/config.hpp"
#include "changecast/simulation.hpp"

namespace changecast {

/// Full MetricsReport as self-describing JSON; no field is ever omitted.
/// latency_seconds is null for undetected changes.
inline nlohmann::json metrics_to_json(const MetricsReport& metrics) {
    nlohmann::json j;
    j["detection"] = nlohmann::json::array();
    for (const auto& outcome : metrics.detection) {
        nlohmann::json d{
            {"at_seconds", outcome.at_seconds},
            {"kind", to_string(outcome.kind)},
            {"detected", outcome.detected},
            {"latency_seconds", nullptr},
        };
        if (outcome.detected) d["latency_seconds"] = outcome.latency_seconds;
        j["detection"].push_back(std::move(d));
    }
    j["false_alarms"] = metrics.false_alarms;
    j["trigger_evaluations"] = metrics.trigger_evaluations;
    j["false_alarm_rate"] = metrics.false_alarm_rate;
    j["messages_total"] = metrics.messages_total;
    j["duplicates_rejected"] = metrics.duplicates_rejected;
    j["bytes_total"] = metrics.bytes_total;
    j["bytes_per_agent"] = metrics.bytes_per_agent;
    j["bytes_weighted_total"] = metrics.bytes_weighted_total;
    j["cdf_error_timeline"] = metrics.cdf_error_timeline;
    j["observations_total"] = metrics.observations_total;
    j["silent_in_window_agents"] = metrics.silent_in_window_agents;
    return j;
}

/// One output record: cell index, seed, the axis assignment that produced the
/// cell, the full realized scenario, and the full metrics. Keys serialize
/// alphabetically (library order), so identical runs emit identical bytes.
inline nlohmann::json
metrics_record(std::uint64_t cell, std::uint64_t seed,
               const std::vector<std::pair<std::string, nlohmann::json>>& params,
               const ScenarioConfig& config, const MetricsReport& metrics) {
    nlohmann::json record;
    record["cell"] = cell;
    record["seed"] = seed;
    record["params"] = nlohmann::json::object();
    for (const auto& [path, value] : params) record["params"][path] = value;
    record["config"] = scenario_to_json(config);
    record["metrics"] = metrics_to_json(metrics);
    return record;
}

namespace io_detail {

inline std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Shortest round-trip number text (the JSON serializer's), shared by the
/// JSONL and CSV writers so both exports agree byte-for-byte on values.
inline std::string number_text(double v) { return nlohmann::json(v).dump(); }

}  // namespace io_detail

/// Flat tabular export. Column order (documented contract):
///   cell, seed, <one column per sweep axis path, in axis order>,
///   observations_total, messages_total, duplicates_rejected, bytes_total,
///   bytes_weighted_total, trigger_evaluations, false_alarms,
///   false_alarm_rate, silent_in_window_agents, changes_total,
///   changes_detected, mean_detection_latency, mean_cdf_error,
///   max_cdf_error, final_cdf_error
/// Latency/error cells are empty when nothing was detected/sampled.
inline std::string csv_header(const std::vector<std::string>& axis_paths) {
    std::string line = "cell,seed";
    for (const auto& path : axis_paths) line += "," + io_detail::csv_escape(path);
    line +=
        ",observations_total,messages_total,duplicates_rejected,bytes_total,"
        "bytes_weighted_total,trigger_evaluations,false_alarms,false_alarm_rate,"
        "silent_in_window_agents,changes_total,changes_detected,"
        "mean_detection_latency,mean_cdf_error,max_cdf_error,final_cdf_error";
    return line;
}

inline std::string csv_row(std::uint64_t cell, std::uint64_t seed,
                           const std::vector<std::pair<std::string, nlohmann::json>>& params,
                           const MetricsReport& metrics) {
    using io_detail::csv_escape;
    using io_detail::number_text;
    std::string line = std::to_string(cell) + "," + std::to_string(seed);
    for (const auto& [path, value] : params) {
        line += ",";
        line += csv_escape(value.is_string() ? value.get<std::string>() : value.dump());
    }

    std::uint64_t detected = 0;
    double latency_sum = 0.0;
    for (const auto& outcome : metrics.detection) {
        if (outcome.detected) {
            ++detected;
            latency_sum += outcome.latency_seconds;
        }
    }
    double error_sum = 0.0, error_max = 0.0;
    for (const auto& [time, error] : metrics.cdf_error_timeline) {
        error_sum += error;
        error_max = std::max(error_max, error);
    }
    const std::size_t samples = metrics.cdf_error_timeline.size();

    line += "," + std::to_string(metrics.observations_total);
    line += "," + std::to_string(metrics.messages_total);
    line += "," + std::to_string(metrics.duplicates_rejected);
    line += "," + std::to_string(metrics.bytes_total);
    line += "," + number_text(metrics.bytes_weighted_total);
    line += "," + std::to_string(metrics.trigger_evaluations);
    line += "," + std::to_string(metrics.false_alarms);
    line += "," + number_text(metrics.false_alarm_rate);
    line += "," + std::to_string(metrics.silent_in_window_agents);
    line += "," + std::to_string(metrics.detection.size());
    line += "," + std::to_string(detected);
    line += detected == 0 ? "," : "," + number_text(latency_sum / static_cast<double>(detected));
    line += samples == 0 ? "," : "," + number_text(error_sum / static_cast<double>(samples));
    line += samples == 0 ? "," : "," + number_text(error_max);
    line += samples == 0 ? "," : "," + number_text(metrics.cdf_error_timeline.back().second);
    return line;
}

}  // namespace changecast
