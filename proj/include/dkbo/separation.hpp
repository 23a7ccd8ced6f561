#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "dkbo/pool.hpp"

namespace dkbo {

/// A multiset of pairwise L2 distances and its summary.
struct DistanceFamily {
    std::vector<double> distances;
    double mean = 0.0;
    double median = 0.0;
};

/// Points split into a high-output class, a low-output class and the rest,
/// with pairwise distances within and across the two classes.
struct ClassPairStats {
    std::vector<std::size_t> high;
    std::vector<std::size_t> low;
    std::optional<DistanceFamily> high_high;
    std::optional<DistanceFamily> high_low;
    std::optional<DistanceFamily> low_low;
};

namespace detail {

inline DistanceFamily summarize(std::vector<double> d) {
    DistanceFamily f;
    f.mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    f.median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    f.distances = std::move(d);
    return f;
}

inline double row_distance(const Matrix& Z, std::size_t i, std::size_t j) {
    return (Z.row(static_cast<Eigen::Index>(i)) - Z.row(static_cast<Eigen::Index>(j))).norm();
}

} // namespace detail

/// Class membership by output thresholds: high = y >= the ceil(hi_q n)-th
/// largest value, low = y <= the ceil(lo_q n)-th smallest. When the thresholds
/// meet (e.g. constant y) every point forms a single high class.
inline ClassPairStats class_pair_distances(const Matrix& Z, const Vector& y, double hi_q = 0.10,
                                           double lo_q = 0.10) {
    if (Z.rows() != y.size()) throw DataError("class_pair_distances: row count mismatch");
    if (!(hi_q > 0.0 && hi_q <= 1.0) || !(lo_q > 0.0 && lo_q <= 1.0) || hi_q + lo_q > 1.0 + 1e-12)
        throw DataError("class quantiles must lie in (0, 1] and sum to at most 1");
    const std::size_t n = static_cast<std::size_t>(y.size());
    ClassPairStats out;
    if (n == 0) return out;
    std::vector<double> sorted(y.data(), y.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const auto n_hi = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(hi_q * static_cast<double>(n) - 1e-9)));
    const auto n_lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(lo_q * static_cast<double>(n) - 1e-9)));
    const double t_hi = sorted[n - std::min(n_hi, n)];
    const double t_lo = sorted[std::min(n_lo, n) - 1];
    for (std::size_t i = 0; i < n; ++i) {
        const double v = y(static_cast<Eigen::Index>(i));
        if (t_hi <= t_lo)
            out.high.push_back(i);
        else if (v >= t_hi)
            out.high.push_back(i);
        else if (v <= t_lo)
            out.low.push_back(i);
    }

    auto within = [&](const std::vector<std::size_t>& cls) -> std::optional<DistanceFamily> {
        if (cls.size() < 2) return std::nullopt;
        std::vector<double> d;
        d.reserve(cls.size() * (cls.size() - 1) / 2);
        for (std::size_t a = 0; a < cls.size(); ++a)
            for (std::size_t b = a + 1; b < cls.size(); ++b) d.push_back(detail::row_distance(Z, cls[a], cls[b]));
        return detail::summarize(std::move(d));
    };
    out.high_high = within(out.high);
    out.low_low = within(out.low);
    if (!out.high.empty() && !out.low.empty()) {
        std::vector<double> d;
        d.reserve(out.high.size() * out.low.size());
        for (auto a : out.high)
            for (auto b : out.low) d.push_back(detail::row_distance(Z, a, b));
        out.high_low = detail::summarize(std::move(d));
    }
    return out;
}

/// mean(high-low) / mean(pooled within-class distances). +inf when the
/// classes are separated but each collapses to a point; empty when the
/// high-low family or both within-class families are absent.
inline std::optional<double> separation_score(const ClassPairStats& s) {
    if (!s.high_low || (!s.high_high && !s.low_low)) return std::nullopt;
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto* fam : {&s.high_high, &s.low_low}) {
        if (!*fam) continue;
        sum += (*fam)->mean * static_cast<double>((*fam)->distances.size());
        count += (*fam)->distances.size();
    }
    const double within = sum / static_cast<double>(count);
    if (within <= 0.0)
        return s.high_low->mean > 0.0 ? std::numeric_limits<double>::infinity()
                                      : std::numeric_limits<double>::quiet_NaN();
    return s.high_low->mean / within;
}

} // namespace dkbo
