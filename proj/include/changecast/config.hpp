#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "changecast/simulation.hpp"

namespace changecast {

/// Parse/shape failure with the offending field named by its dotted path.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace cfg_detail {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path.empty() ? what : path + ": " + what);
}

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "must be an object");
}

/// Reject unknown keys so typos surface as diagnostics instead of silence.
inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) fail(join(path, key), "unknown field");
    }
}

inline double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "must be a number");
    return j.get<double>();
}

inline std::uint64_t get_uint(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    fail(path, "must be a non-negative integer");
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "must be a string");
    return j.get<std::string>();
}

/// Scalar-or-array numeric list (e.g. one observation interval shared by all
/// agents, or one per agent).
inline std::vector<double> get_number_list(const json& j, const std::string& path) {
    if (j.is_number()) return {j.get<double>()};
    if (j.is_array()) {
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
        if (out.empty()) fail(path, "must not be an empty array");
        return out;
    }
    fail(path, "must be a number or an array of numbers");
}

inline TriggerPolicy parse_policy(const json& j, const std::string& path) {
    const std::string name = get_string(j, path);
    if (name == "send_all") return TriggerPolicy::send_all;
    if (name == "full_resample") return TriggerPolicy::full_resample;
    if (name == "post_change_only") return TriggerPolicy::post_change_only;
    fail(path, "must be one of send_all, full_resample, post_change_only");
}

inline const char* to_string(TriggerPolicy p) {
    switch (p) {
        case TriggerPolicy::send_all: return "send_all";
        case TriggerPolicy::full_resample: return "full_resample";
        case TriggerPolicy::post_change_only: return "post_change_only";
    }
    return "unknown";
}

inline Family parse_family(const json& j, const std::string& path) {
    const std::string name = get_string(j, path);
    if (name == "normal") return Family::normal;
    if (name == "lognormal") return Family::lognormal;
    if (name == "uniform") return Family::uniform;
    if (name == "pareto") return Family::pareto;
    fail(path, "must be one of normal, lognormal, uniform, pareto");
}

inline ChangeKind parse_change_kind(const json& j, const std::string& path) {
    const std::string name = get_string(j, path);
    if (name == "level_shift") return ChangeKind::level_shift;
    if (name == "scale_change") return ChangeKind::scale_change;
    if (name == "drift") return ChangeKind::drift;
    fail(path, "must be one of level_shift, scale_change, drift");
}

}  // namespace cfg_detail

inline ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::string& path = "") {
    using namespace cfg_detail;
    expect_object(j, path);
    check_keys(j, path,
               {"num_agents", "duration_seconds", "obs_interval_seconds", "agent",
                "window_seconds", "generator", "changes", "baseline", "seed",
                "sample_interval_seconds", "channel_delay_seconds", "byte_weights"});
    ScenarioConfig config;

    for (const char* key : {"num_agents", "duration_seconds", "obs_interval_seconds",
                            "window_seconds", "agent", "generator"}) {
        if (!j.contains(key)) fail(join(path, key), "required field missing");
    }

    config.num_agents =
        static_cast<std::size_t>(get_uint(j["num_agents"], join(path, "num_agents")));
    config.duration_seconds = get_number(j["duration_seconds"], join(path, "duration_seconds"));
    config.obs_interval_seconds =
        get_number_list(j["obs_interval_seconds"], join(path, "obs_interval_seconds"));
    config.window_seconds = get_number(j["window_seconds"], join(path, "window_seconds"));

    {
        const auto& a = j["agent"];
        const std::string apath = join(path, "agent");
        expect_object(a, apath);
        check_keys(a, apath,
                   {"buffer_capacity", "max_transmit", "alpha", "policy", "min_seg",
                    "trigger_stride"});
        if (a.contains("buffer_capacity"))
            config.agent.buffer_capacity = static_cast<std::size_t>(
                get_uint(a["buffer_capacity"], join(apath, "buffer_capacity")));
        if (a.contains("max_transmit"))
            config.agent.max_transmit =
                static_cast<std::size_t>(get_uint(a["max_transmit"], join(apath, "max_transmit")));
        if (a.contains("alpha")) config.agent.alpha = get_number(a["alpha"], join(apath, "alpha"));
        if (a.contains("policy")) config.agent.policy = parse_policy(a["policy"], join(apath, "policy"));
        if (a.contains("min_seg"))
            config.agent.min_seg =
                static_cast<std::size_t>(get_uint(a["min_seg"], join(apath, "min_seg")));
        if (a.contains("trigger_stride"))
            config.agent.trigger_stride = static_cast<std::size_t>(
                get_uint(a["trigger_stride"], join(apath, "trigger_stride")));
    }

    {
        const auto& g = j["generator"];
        const std::string gpath = join(path, "generator");
        expect_object(g, gpath);
        check_keys(g, gpath, {"family", "params"});
        if (!g.contains("family")) fail(join(gpath, "family"), "required field missing");
        if (!g.contains("params")) fail(join(gpath, "params"), "required field missing");
        config.generator.family = parse_family(g["family"], join(gpath, "family"));
        const auto params = get_number_list(g["params"], join(gpath, "params"));
        if (params.size() != 2) fail(join(gpath, "params"), "must hold exactly two numbers");
        config.generator.param_a = params[0];
        config.generator.param_b = params[1];
    }

    if (j.contains("changes")) {
        const auto& cs = j["changes"];
        const std::string cspath = join(path, "changes");
        if (!cs.is_array()) fail(cspath, "must be an array");
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const auto& c = cs[i];
            const std::string cpath = cspath + "[" + std::to_string(i) + "]";
            expect_object(c, cpath);
            check_keys(c, cpath, {"at_seconds", "kind", "magnitude", "affected_agents"});
            for (const char* key : {"at_seconds", "kind", "magnitude", "affected_agents"}) {
                if (!c.contains(key)) fail(join(cpath, key), "required field missing");
            }
            ChangeSpec change;
            change.at_seconds = get_number(c["at_seconds"], join(cpath, "at_seconds"));
            change.kind = parse_change_kind(c["kind"], join(cpath, "kind"));
            change.magnitude = get_number(c["magnitude"], join(cpath, "magnitude"));
            const auto& affected = c["affected_agents"];
            const std::string apath = join(cpath, "affected_agents");
            if (affected.is_string()) {
                if (affected.get<std::string>() != "all")
                    fail(apath, "string form must be \"all\"");
                for (std::size_t id = 0; id < config.num_agents; ++id)
                    change.affected_agents.push_back(static_cast<std::int32_t>(id));
            } else if (affected.is_array()) {
                for (std::size_t k = 0; k < affected.size(); ++k)
                    change.affected_agents.push_back(static_cast<std::int32_t>(
                        get_uint(affected[k], apath + "[" + std::to_string(k) + "]")));
            } else {
                fail(apath, "must be \"all\" or an array of agent ids");
            }
            config.changes.push_back(std::move(change));
        }
    }

    if (j.contains("baseline") && !j["baseline"].is_null()) {
        const auto& b = j["baseline"];
        const std::string bpath = join(path, "baseline");
        expect_object(b, bpath);
        check_keys(b, bpath, {"fill_capacity", "probes", "update_weight", "period_seconds"});
        BaselineParams params;
        if (b.contains("fill_capacity"))
            params.fill_capacity = static_cast<std::size_t>(
                get_uint(b["fill_capacity"], join(bpath, "fill_capacity")));
        if (b.contains("probes")) {
            params.probes = get_number_list(b["probes"], join(bpath, "probes"));
        }
        if (b.contains("update_weight"))
            params.update_weight = get_number(b["update_weight"], join(bpath, "update_weight"));
        if (b.contains("period_seconds"))
            params.period_seconds = get_number(b["period_seconds"], join(bpath, "period_seconds"));
        config.baseline = std::move(params);
    }

    if (j.contains("seed")) config.seed = get_uint(j["seed"], join(path, "seed"));
    if (j.contains("sample_interval_seconds"))
        config.sample_interval_seconds =
            get_number(j["sample_interval_seconds"], join(path, "sample_interval_seconds"));
    if (j.contains("channel_delay_seconds"))
        config.channel_delay_seconds =
            get_number(j["channel_delay_seconds"], join(path, "channel_delay_seconds"));
    if (j.contains("byte_weights") && !(j["byte_weights"].is_array() && j["byte_weights"].empty()))
        config.byte_weights = get_number_list(j["byte_weights"], join(path, "byte_weights"));

    return config;
}

/// Normalized JSON image: every field present, enums as strings, lists as
/// arrays. Round-trips through scenario_from_json unchanged.
inline nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    using cfg_detail::to_string;
    nlohmann::json j;
    j["num_agents"] = config.num_agents;
    j["duration_seconds"] = config.duration_seconds;
    j["obs_interval_seconds"] = config.obs_interval_seconds;
    j["window_seconds"] = config.window_seconds;
    j["agent"] = {
        {"buffer_capacity", config.agent.buffer_capacity},
        {"max_transmit", config.agent.max_transmit},
        {"alpha", config.agent.alpha},
        {"policy", to_string(config.agent.policy)},
        {"min_seg", config.agent.min_seg},
        {"trigger_stride", config.agent.trigger_stride},
    };
    j["generator"] = {
        {"family", changecast::to_string(config.generator.family)},
        {"params", {config.generator.param_a, config.generator.param_b}},
    };
    j["changes"] = nlohmann::json::array();
    for (const auto& change : config.changes) {
        j["changes"].push_back({
            {"at_seconds", change.at_seconds},
            {"kind", changecast::to_string(change.kind)},
            {"magnitude", change.magnitude},
            {"affected_agents", change.affected_agents},
        });
    }
    if (config.baseline.has_value()) {
        j["baseline"] = {
            {"fill_capacity", config.baseline->fill_capacity},
            {"probes", config.baseline->probes},
            {"update_weight", config.baseline->update_weight},
            {"period_seconds", config.baseline->period_seconds},
        };
    } else {
        j["baseline"] = nullptr;
    }
    j["seed"] = config.seed;
    j["sample_interval_seconds"] = config.sample_interval_seconds;
    j["channel_delay_seconds"] = config.channel_delay_seconds;
    j["byte_weights"] = config.byte_weights;
    return j;
}

/// One sweep axis: a dotted path into the scenario JSON image and the values
/// it takes. Array elements address as e.g. "changes[0].magnitude".
struct SweepAxis {
    std::string path;
    std::vector<nlohmann::json> values;
};

struct SweepSpec {
    ScenarioConfig base;
    std::vector<SweepAxis> axes;
    std::uint64_t replications = 1;  // seeds base_seed .. base_seed + r - 1
    std::uint64_t base_seed = 0;
};

namespace cfg_detail {

/// Resolve a dotted path (with [k] array suffixes) inside the normalized
/// scenario image; the returned pointer stays valid for writes.
inline json* resolve_path(json& root, const std::string& dotted, const std::string& diag) {
    json* node = &root;
    std::size_t pos = 0;
    while (pos < dotted.size()) {
        std::size_t dot = dotted.find('.', pos);
        std::string segment = dotted.substr(pos, dot == std::string::npos ? dot : dot - pos);
        pos = dot == std::string::npos ? dotted.size() : dot + 1;
        std::string key = segment;
        std::string index;
        if (const auto bracket = segment.find('['); bracket != std::string::npos) {
            key = segment.substr(0, bracket);
            if (segment.back() != ']') fail(diag, "malformed path segment '" + segment + "'");
            index = segment.substr(bracket + 1, segment.size() - bracket - 2);
        }
        if (!node->is_object() || !node->contains(key))
            fail(diag, "path names no existing config field (at '" + key + "')");
        node = &(*node)[key];
        if (!index.empty()) {
            std::size_t k = 0;
            try {
                k = std::stoul(index);
            } catch (const std::exception&) {
                fail(diag, "malformed array index '" + index + "'");
            }
            if (!node->is_array() || k >= node->size())
                fail(diag, "array index " + index + " out of range");
            node = &(*node)[k];
        }
    }
    return node;
}

}  // namespace cfg_detail

inline SweepSpec sweep_from_json(const nlohmann::json& j) {
    using namespace cfg_detail;
    expect_object(j, "");
    check_keys(j, "", {"base", "axes", "replications", "base_seed"});
    for (const char* key : {"base", "axes"}) {
        if (!j.contains(key)) fail(key, "required field missing");
    }
    SweepSpec spec;
    spec.base = scenario_from_json(j["base"], "base");
    spec.base_seed = spec.base.seed;

    const auto& axes = j["axes"];
    if (!axes.is_array()) fail("axes", "must be an array");
    json image = scenario_to_json(spec.base);
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const auto& a = axes[i];
        const std::string apath = "axes[" + std::to_string(i) + "]";
        expect_object(a, apath);
        check_keys(a, apath, {"path", "values"});
        for (const char* key : {"path", "values"}) {
            if (!a.contains(key)) fail(join(apath, key), "required field missing");
        }
        SweepAxis axis;
        axis.path = get_string(a["path"], join(apath, "path"));
        resolve_path(image, axis.path, join(apath, "path"));  // must name a real field
        if (!a["values"].is_array() || a["values"].empty())
            fail(join(apath, "values"), "must be a non-empty array");
        for (const auto& v : a["values"]) axis.values.push_back(v);
        spec.axes.push_back(std::move(axis));
    }

    if (j.contains("replications")) {
        spec.replications = get_uint(j["replications"], "replications");
        if (spec.replications == 0) fail("replications", "must be at least 1");
    }
    if (j.contains("base_seed")) spec.base_seed = get_uint(j["base_seed"], "base_seed");
    return spec;
}

/// One realized sweep cell: the config with this cell's axis values and seed
/// applied, plus the axis assignment for the output record.
struct SweepCell {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, nlohmann::json>> params;
    ScenarioConfig config;
};

/// Cross product of axis values (later axes fastest) with replications
/// innermost; cell index is the flat enumeration order.
inline std::vector<SweepCell> expand_sweep(const SweepSpec& spec) {
    using namespace cfg_detail;
    std::vector<SweepCell> cells;
    std::vector<std::size_t> pick(spec.axes.size(), 0);
    const json base_image = scenario_to_json(spec.base);

    while (true) {
        json image = base_image;
        std::vector<std::pair<std::string, json>> params;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            const auto& axis = spec.axes[a];
            *resolve_path(image, axis.path, axis.path) = axis.values[pick[a]];
            params.emplace_back(axis.path, axis.values[pick[a]]);
        }
        for (std::uint64_t r = 0; r < spec.replications; ++r) {
            SweepCell cell;
            cell.index = cells.size();
            cell.seed = spec.base_seed + r;
            cell.params = params;
            image["seed"] = cell.seed;
            cell.config = scenario_from_json(image);
            cells.push_back(std::move(cell));
        }
        std::size_t a = spec.axes.size();
        while (a > 0) {
            --a;
            if (++pick[a] < spec.axes[a].values.size()) break;
            pick[a] = 0;
            if (a == 0) return cells;
        }
        if (spec.axes.empty()) return cells;
    }
}

namespace cfg_detail {

inline json parse_json_file(const std::string& file_path) {
    std::ifstream in(file_path);
    if (!in) fail(file_path, "cannot open file");
    try {
        return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        fail(file_path, std::string("not valid JSON: ") + e.what());
    }
}

}  // namespace cfg_detail

inline ScenarioConfig load_scenario_file(const std::string& file_path) {
    return scenario_from_json(cfg_detail::parse_json_file(file_path));
}

inline SweepSpec load_sweep_file(const std::string& file_path) {
    return sweep_from_json(cfg_detail::parse_json_file(file_path));
}

}  // namespace changecast
