#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "changecast/rng.hpp"
#include "changecast/types.hpp"

namespace changecast {

enum class Family {
    normal,
    lognormal,
    uniform,
    pareto,
};

inline const char* to_string(Family f) {
    switch (f) {
        case Family::normal: return "normal";
        case Family::lognormal: return "lognormal";
        case Family::uniform: return "uniform";
        case Family::pareto: return "pareto";
    }
    return "unknown";
}

/// Synthetic stream family. Parameter meaning by family:
///   normal(mean, sd), lognormal(log_mean, log_sd),
///   uniform(lo, hi), pareto(scale, shape).
struct StreamSpec {
    Family family = Family::normal;
    double param_a = 0.0;
    double param_b = 1.0;
};

inline void validate_stream_spec(const StreamSpec& spec) {
    const auto fail = [&](const char* what) {
        throw std::invalid_argument(std::string("invalid family params: ") + to_string(spec.family) +
                                    " " + what);
    };
    if (!std::isfinite(spec.param_a) || !std::isfinite(spec.param_b)) fail("params must be finite");
    switch (spec.family) {
        case Family::normal:
            if (spec.param_b <= 0.0) fail("sd must be positive");
            break;
        case Family::lognormal:
            if (spec.param_b <= 0.0) fail("log_sd must be positive");
            break;
        case Family::uniform:
            if (spec.param_b <= spec.param_a) fail("hi must exceed lo");
            break;
        case Family::pareto:
            if (spec.param_a <= 0.0) fail("scale must be positive");
            if (spec.param_b <= 0.0) fail("shape must be positive");
            break;
    }
}

enum class ChangeKind {
    level_shift,
    scale_change,
    drift,
};

inline const char* to_string(ChangeKind k) {
    switch (k) {
        case ChangeKind::level_shift: return "level_shift";
        case ChangeKind::scale_change: return "scale_change";
        case ChangeKind::drift: return "drift";
    }
    return "unknown";
}

/// One injected distribution change. magnitude is in units of the family's
/// reference scale for level_shift and drift (per second), and is the
/// multiplicative spread factor for scale_change.
struct ChangeSpec {
    double at_seconds = 0.0;
    ChangeKind kind = ChangeKind::level_shift;
    double magnitude = 0.0;
    std::vector<std::int32_t> affected_agents;
};

inline bool change_affects(const ChangeSpec& change, std::int32_t agent_id) {
    return std::find(change.affected_agents.begin(), change.affected_agents.end(), agent_id) !=
           change.affected_agents.end();
}

namespace detail {

// Phi^-1(0.75), for IQR-based scale fallbacks.
inline constexpr double z75 = 0.6744897501960817;
// IQR of the standard normal; divides an IQR into sd-equivalent units.
inline constexpr double normal_iqr = 2.0 * z75;

}  // namespace detail

/// Pre-change central reference of the family: the mean when finite, the
/// median otherwise (heavy-tailed pareto shapes).
inline double reference_center(const StreamSpec& spec) {
    switch (spec.family) {
        case Family::normal: return spec.param_a;
        case Family::lognormal: {
            const double mean = std::exp(spec.param_a + spec.param_b * spec.param_b / 2.0);
            if (std::isfinite(mean)) return mean;
            return std::exp(spec.param_a);  // median
        }
        case Family::uniform: return (spec.param_a + spec.param_b) / 2.0;
        case Family::pareto: {
            const double xm = spec.param_a, shape = spec.param_b;
            if (shape > 1.0) {
                const double mean = shape * xm / (shape - 1.0);
                if (std::isfinite(mean)) return mean;
            }
            return xm * std::pow(2.0, 1.0 / shape);  // median
        }
    }
    throw std::invalid_argument("invalid family params: unknown family");
}

/// Pre-change scale unit of the family: the standard deviation when finite,
/// IQR / (normal IQR) otherwise, so change magnitudes stay sd-like.
inline double reference_scale(const StreamSpec& spec) {
    switch (spec.family) {
        case Family::normal: return spec.param_b;
        case Family::lognormal: {
            const double s2 = spec.param_b * spec.param_b;
            const double var =
                (std::exp(s2) - 1.0) * std::exp(2.0 * spec.param_a + s2);
            if (std::isfinite(var)) return std::sqrt(var);
            const double iqr = std::exp(spec.param_a + detail::z75 * spec.param_b) -
                               std::exp(spec.param_a - detail::z75 * spec.param_b);
            return iqr / detail::normal_iqr;
        }
        case Family::uniform: return (spec.param_b - spec.param_a) / std::sqrt(12.0);
        case Family::pareto: {
            const double xm = spec.param_a, shape = spec.param_b;
            if (shape > 2.0) {
                const double sd =
                    xm * std::sqrt(shape) / ((shape - 1.0) * std::sqrt(shape - 2.0));
                if (std::isfinite(sd)) return sd;
            }
            const double iqr = xm * (std::pow(4.0, 1.0 / shape) -
                                     std::pow(4.0 / 3.0, 1.0 / shape));
            return iqr / detail::normal_iqr;
        }
    }
    throw std::invalid_argument("invalid family params: unknown family");
}

/// One raw (pre-change) draw. Draw costs per family are fixed: normal and
/// lognormal consume two engine outputs, uniform and pareto one.
inline double draw_value(SubstreamRng& rng, const StreamSpec& spec) {
    switch (spec.family) {
        case Family::normal: return spec.param_a + spec.param_b * rng.next_normal();
        case Family::lognormal: return std::exp(spec.param_a + spec.param_b * rng.next_normal());
        case Family::uniform:
            return spec.param_a + (spec.param_b - spec.param_a) * rng.next_unit();
        case Family::pareto:
            return spec.param_a * std::pow(1.0 - rng.next_unit(), -1.0 / spec.param_b);
    }
    throw std::invalid_argument("invalid family params: unknown family");
}

/// Apply every change active at `now` (at_seconds inclusive) for this agent.
/// center/scale are the family's pre-change references; drift contributions
/// are clamped to ±100 scale units to keep pathological configs bounded.
inline double apply_changes(double value, double now, const std::vector<ChangeSpec>& changes,
                            std::int32_t agent_id, double center, double scale) {
    for (const auto& change : changes) {
        if (now < change.at_seconds || !change_affects(change, agent_id)) continue;
        switch (change.kind) {
            case ChangeKind::level_shift:
                value += change.magnitude * scale;
                break;
            case ChangeKind::scale_change:
                value = center + change.magnitude * (value - center);
                break;
            case ChangeKind::drift: {
                const double added = change.magnitude * (now - change.at_seconds) * scale;
                value += std::clamp(added, -100.0 * scale, 100.0 * scale);
                break;
            }
        }
    }
    return value;
}

/// Deterministic synthetic stream for one agent: draws at the schedule times
/// from the family's substream, transformed by whatever changes are active.
inline std::vector<TimeValuePair> generate_stream(const StreamSpec& spec,
                                                  const std::vector<ChangeSpec>& changes,
                                                  std::int32_t agent_id,
                                                  const std::vector<double>& schedule,
                                                  std::uint64_t seed) {
    validate_stream_spec(spec);
    SubstreamRng rng(seed, static_cast<std::uint64_t>(static_cast<std::uint32_t>(agent_id)));
    const double center = reference_center(spec);
    const double scale = reference_scale(spec);
    std::vector<TimeValuePair> out;
    out.reserve(schedule.size());
    for (double t : schedule) {
        out.push_back({t, apply_changes(draw_value(rng, spec), t, changes, agent_id, center, scale)});
    }
    return out;
}

}  // namespace changecast
