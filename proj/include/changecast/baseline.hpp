#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "changecast/stats.hpp"
#include "changecast/types.hpp"

namespace changecast {

/// Fill buffer for the periodic scheme: values accumulate until capacity,
/// then fold into the quantile summary and flush.
struct DataBuffer {
    std::vector<double> values;
    std::size_t capacity = 0;
};

/// Pool-adjacent-violators pass: replaces v with the closest non-decreasing
/// vector (equal weights). Exact convex combinations of monotone vectors stay
/// monotone, so this only ever repairs floating-point slack.
inline void isotonic_pass(std::vector<double>& v) {
    std::vector<double> block_value;
    std::vector<std::size_t> block_count;
    for (double x : v) {
        block_value.push_back(x);
        block_count.push_back(1);
        while (block_value.size() > 1 && block_value[block_value.size() - 2] > block_value.back()) {
            const double merged = (block_value[block_value.size() - 2] *
                                       static_cast<double>(block_count[block_count.size() - 2]) +
                                   block_value.back() * static_cast<double>(block_count.back())) /
                                  static_cast<double>(block_count[block_count.size() - 2] +
                                                      block_count.back());
            block_count[block_count.size() - 2] += block_count.back();
            block_value[block_value.size() - 2] = merged;
            block_value.pop_back();
            block_count.pop_back();
        }
    }
    v.clear();
    for (std::size_t b = 0; b < block_value.size(); ++b) {
        v.insert(v.end(), block_count[b], block_value[b]);
    }
}

namespace detail {

inline std::vector<double> nearest_rank_quantiles(const std::vector<double>& values,
                                                  const std::vector<double>& probes) {
    const auto cdf = stats::ecdf(values);
    std::vector<double> out;
    out.reserve(probes.size());
    for (double p : probes) out.push_back(stats::quantile(cdf, p));
    return out;
}

}  // namespace detail

/// Append one value; when the buffer reaches capacity, move the summary
/// toward the fill's nearest-rank quantiles by the exponential weight w
/// (full replacement on the first fill) and flush the buffer.
inline void buffer_push(DataBuffer& d, QuantileBuffer& q, double value, double w) {
    if (!std::isfinite(value)) throw std::invalid_argument("non-finite value");
    if (!(w > 0.0 && w <= 1.0)) throw std::invalid_argument("update weight out of (0, 1]");
    if (d.capacity == 0) throw std::invalid_argument("data buffer capacity must be positive");
    d.values.push_back(value);
    if (d.values.size() < d.capacity) return;

    const std::vector<double> fill = detail::nearest_rank_quantiles(d.values, q.probes);
    if (q.weight == 0) {
        q.estimates = fill;
    } else {
        for (std::size_t j = 0; j < q.estimates.size(); ++j) {
            q.estimates[j] = (1.0 - w) * q.estimates[j] + w * fill[j];
        }
    }
    isotonic_pass(q.estimates);
    d.values.clear();
    ++q.weight;
}

inline Message publish_summary(const QuantileBuffer& q, std::int32_t agent_id,
                               std::uint64_t seq) {
    if (q.weight < 1) throw std::runtime_error("no summary available");
    Message msg;
    msg.agent_id = agent_id;
    msg.seq = seq;
    msg.kind = MessageKind::baseline_summary;
    msg.summary = q;
    return msg;
}

/// Per-probe weighted mean of the summaries' estimates, weights being each
/// summary's fill count. The result's weight is the total.
inline QuantileBuffer aggregate_summaries(const std::vector<QuantileBuffer>& summaries) {
    if (summaries.empty()) throw std::invalid_argument("no summaries to aggregate");
    const auto& probes = summaries.front().probes;
    for (const auto& s : summaries) {
        if (s.probes != probes) throw std::invalid_argument("mismatched probe vectors");
    }
    QuantileBuffer out;
    out.probes = probes;
    out.estimates.assign(probes.size(), 0.0);
    std::uint64_t total = 0;
    for (const auto& s : summaries) total += s.weight;
    if (total == 0) throw std::invalid_argument("no filled summaries");
    for (const auto& s : summaries) {
        const double share = static_cast<double>(s.weight) / static_cast<double>(total);
        for (std::size_t j = 0; j < probes.size(); ++j) out.estimates[j] += share * s.estimates[j];
    }
    isotonic_pass(out.estimates);
    out.weight = total;
    return out;
}

/// Right-continuous step CDF implied by a summary:
/// F(x) = max{probes[j] : estimates[j] <= x}, zero below the first estimate.
inline double summary_cdf_value(const QuantileBuffer& q, double x) {
    const auto it = std::upper_bound(q.estimates.begin(), q.estimates.end(), x);
    if (it == q.estimates.begin()) return 0.0;
    return q.probes[static_cast<std::size_t>(it - q.estimates.begin()) - 1];
}

/// KS distance between the summary-implied step CDF and a sample ECDF:
/// supremum of the pointwise gap over both step sets, left and right limits.
inline double summary_ks_distance(const QuantileBuffer& q, const stats::EmpiricalCdf& sample) {
    if (q.weight == 0 || q.estimates.empty()) throw std::invalid_argument("no filled summaries");
    std::vector<double> points = q.estimates;
    const auto& sorted = sample.sorted_values();
    points.insert(points.end(), sorted.begin(), sorted.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    const auto n = static_cast<double>(sorted.size());
    double sup = 0.0;
    for (double b : points) {
        const double f_right = summary_cdf_value(q, b);
        const double g_right = sample(b);
        const auto below_f = std::lower_bound(q.estimates.begin(), q.estimates.end(), b);
        const double f_left =
            below_f == q.estimates.begin()
                ? 0.0
                : q.probes[static_cast<std::size_t>(below_f - q.estimates.begin()) - 1];
        const double g_left =
            static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), b) -
                                sorted.begin()) /
            n;
        sup = std::max({sup, std::abs(f_right - g_right), std::abs(f_left - g_left)});
    }
    return sup;
}

}  // namespace changecast
