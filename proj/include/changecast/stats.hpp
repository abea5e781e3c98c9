#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

// Nonparametric two-sample machinery shared by the trigger policies and the
// evaluation harness: midranks, the Mann-Whitney U test with tie-corrected
// normal approximation, an exact small-sample permutation p-value, empirical
// CDFs, the two-sample Kolmogorov-Smirnov distance, and a change-point scan.

namespace changecast::stats {

/// Upper tail of the standard normal distribution.
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Two-sided normal p-value 2*(1 - Phi(|z|)), clamped to (0, 1].
inline double two_sided_p(double z) {
    double p = std::erfc(std::abs(z) / std::sqrt(2.0));
    if (p <= 0.0) p = std::numeric_limits<double>::min();
    return std::min(p, 1.0);
}

/// Ranks 1..n with ties assigned the mean of the rank positions they occupy.
/// The returned ranks always sum to n(n+1)/2.
inline std::vector<double> midranks(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("empty sample");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

namespace detail {

/// Sum of t^3 - t over tie groups of a value multiset.
inline double tie_term(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    std::size_t i = 0;
    while (i < values.size()) {
        std::size_t j = i;
        while (j + 1 < values.size() && values[j + 1] == values[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        sum += t * t * t - t;
        i = j + 1;
    }
    return sum;
}

/// Tie-corrected variance of U for group sizes (n1, n2) within a pooled
/// sample of size n1 + n2 whose tie structure is summarized by tie_sum.
inline double u_variance(double n1, double n2, double tie_sum) {
    const double n = n1 + n2;
    double var = (n1 * n2 / 12.0) * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    return var > 0.0 ? var : 0.0;
}

}  // namespace detail

struct UStatResult {
    double u = 0.0;            // U statistic for the first sample
    double z = 0.0;            // tie-corrected standardized statistic
    double p_two_sided = 1.0;  // in (0, 1]
};

/// Rank-sum Mann-Whitney U with midrank tie handling. u counts pairs (a, b)
/// with a > b plus half of the tied pairs; z uses the tie-corrected normal
/// approximation. A fully tied pooled sample yields z = 0, p = 1.
inline UStatResult mann_whitney_u(const std::vector<double>& sample_a,
                                  const std::vector<double>& sample_b) {
    if (sample_a.empty() || sample_b.empty()) throw std::invalid_argument("empty sample");
    const double n1 = static_cast<double>(sample_a.size());
    const double n2 = static_cast<double>(sample_b.size());

    std::vector<double> pooled;
    pooled.reserve(sample_a.size() + sample_b.size());
    pooled.insert(pooled.end(), sample_a.begin(), sample_a.end());
    pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());

    const std::vector<double> ranks = midranks(pooled);
    double r1 = 0.0;
    for (std::size_t i = 0; i < sample_a.size(); ++i) r1 += ranks[i];

    UStatResult result;
    result.u = r1 - n1 * (n1 + 1.0) / 2.0;

    const double var = detail::u_variance(n1, n2, detail::tie_term(pooled));
    if (var > 0.0) {
        result.z = (result.u - n1 * n2 / 2.0) / std::sqrt(var);
        result.p_two_sided = two_sided_p(result.z);
    } else {
        result.z = 0.0;
        result.p_two_sided = 1.0;
    }
    return result;
}

/// Exact two-sided p-value by enumerating every C(n1+n2, n1) relabeling of
/// the pooled sample and counting labelings with |U - n1*n2/2| at least as
/// large as observed. Bounded to pooled sizes <= 14.
inline double exact_permutation_p(const std::vector<double>& sample_a,
                                  const std::vector<double>& sample_b) {
    if (sample_a.empty() || sample_b.empty()) throw std::invalid_argument("empty sample");
    const std::size_t n1 = sample_a.size();
    const std::size_t n = n1 + sample_b.size();
    if (n > 14) throw std::invalid_argument("too large for exact enumeration");

    const double mean = 0.5 * static_cast<double>(n1) * static_cast<double>(n - n1);
    const double observed_dev = std::abs(mann_whitney_u(sample_a, sample_b).u - mean);

    std::vector<double> pooled;
    pooled.reserve(n);
    pooled.insert(pooled.end(), sample_a.begin(), sample_a.end());
    pooled.insert(pooled.end(), sample_b.begin(), sample_b.end());
    const std::vector<double> ranks = midranks(pooled);
    const double base = static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;

    // Walk all index subsets of size n1 in lexicographic order.
    std::vector<std::size_t> idx(n1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::uint64_t extreme = 0;
    std::uint64_t total = 0;
    for (;;) {
        double r1 = 0.0;
        for (std::size_t i : idx) r1 += ranks[i];
        if (std::abs(r1 - base - mean) >= observed_dev - 1e-12) ++extreme;
        ++total;

        // next combination
        std::size_t k = n1;
        while (k > 0 && idx[k - 1] == n - n1 + k - 1) --k;
        if (k == 0) break;
        ++idx[k - 1];
        for (std::size_t j = k; j < n1; ++j) idx[j] = idx[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Empirical CDF of a non-empty value multiset. Evaluation at x returns
/// #{v <= x} / n: right-continuous, non-decreasing, 0 below the minimum and
/// 1 at the maximum.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw std::invalid_argument("empty sample");
        std::sort(values_.begin(), values_.end());
    }

    double operator()(double x) const {
        const auto it = std::upper_bound(values_.begin(), values_.end(), x);
        return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
    }

    std::size_t size() const { return values_.size(); }
    double min() const { return values_.front(); }
    double max() const { return values_.back(); }
    const std::vector<double>& sorted_values() const { return values_; }

private:
    std::vector<double> values_;  // non-empty, sorted ascending
};

inline EmpiricalCdf ecdf(std::vector<double> values) { return EmpiricalCdf(std::move(values)); }

/// sup_x |F_a(x) - F_b(x)|. Both CDFs are step functions, so the supremum is
/// attained at a breakpoint of either support.
inline double ks_distance(const EmpiricalCdf& cdf_a, const EmpiricalCdf& cdf_b) {
    double d = 0.0;
    for (double x : cdf_a.sorted_values()) d = std::max(d, std::abs(cdf_a(x) - cdf_b(x)));
    for (double x : cdf_b.sorted_values()) d = std::max(d, std::abs(cdf_a(x) - cdf_b(x)));
    return d;
}

/// Nearest-rank quantile: the ceil(p*n)-th smallest value for p > 0, the
/// minimum for p = 0.
inline double quantile(const EmpiricalCdf& cdf, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability out of [0, 1]");
    const std::vector<double>& v = cdf.sorted_values();
    if (p == 0.0) return v.front();
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    return v[std::min(rank, v.size()) - 1];
}

struct ChangePointEstimate {
    std::size_t split_index = 0;  // first index of the post-change segment
    double z_abs = 0.0;           // |z| at the maximizing split
    double p_value = 1.0;         // Bonferroni-adjusted over the scanned splits
};

/// Scans every split s in [min_seg, n - min_seg] and standardizes the
/// two-sample U of prefix vs suffix. Returns the maximizing split (smallest
/// index on ties) when its Bonferroni-adjusted p-value is below alpha.
///
/// The pooled sample is the whole buffer for every split, so midranks and the
/// tie correction are computed once and per-split rank sums come from prefix
/// sums; each split's z is identical to calling mann_whitney_u on the two
/// segments directly.
inline std::optional<ChangePointEstimate> change_point_scan(const std::vector<double>& values,
                                                            std::size_t min_seg, double alpha) {
    if (min_seg < 2) throw std::invalid_argument("segment too small");
    const std::size_t n = values.size();
    if (n < 2 * min_seg) return std::nullopt;

    const std::vector<double> ranks = midranks(values);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + ranks[i];
    const double tie_sum = detail::tie_term(values);

    double best_abs_z = -1.0;
    std::size_t best_split = min_seg;
    for (std::size_t s = min_seg; s + min_seg <= n; ++s) {
        const double n1 = static_cast<double>(s);
        const double n2 = static_cast<double>(n - s);
        const double u = prefix[s] - n1 * (n1 + 1.0) / 2.0;
        const double var = detail::u_variance(n1, n2, tie_sum);
        const double abs_z = var > 0.0 ? std::abs(u - n1 * n2 / 2.0) / std::sqrt(var) : 0.0;
        if (abs_z > best_abs_z) {
            best_abs_z = abs_z;
            best_split = s;
        }
    }

    const auto num_splits = static_cast<double>(n - 2 * min_seg + 1);
    const double adjusted = std::min(1.0, two_sided_p(best_abs_z) * num_splits);
    if (adjusted >= alpha) return std::nullopt;
    return ChangePointEstimate{best_split, best_abs_z, adjusted};
}

}  // namespace changecast::stats
