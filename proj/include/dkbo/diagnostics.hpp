#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dkbo/pool.hpp"
#include "dkbo/random.hpp"
#include "dkbo/separation.hpp"
#include "dkbo/session.hpp"
#include "dkbo/surrogate.hpp"

namespace dkbo {

// ---------------------------------------------------------------------------
// Coverage

/// The global top-quantile of a labeled pool: the ceil(quantile * n)
/// highest-labeled rows (ties broken by row order).
inline std::set<std::size_t> reference_set(const Vector& y, double quantile = 0.05) {
    if (!(quantile > 0.0 && quantile <= 1.0)) throw DataError("coverage quantile must lie in (0, 1]");
    const auto n = static_cast<std::size_t>(y.size());
    const auto k = std::min(n, static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(n) - 1e-9)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y(static_cast<Eigen::Index>(a)) > y(static_cast<Eigen::Index>(b));
    });
    return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(k, 1))};
}

/// Fraction of the reference set among the given evaluated rows.
inline double coverage_of(const std::vector<std::size_t>& evaluated, const std::set<std::size_t>& reference) {
    std::size_t hit = 0;
    for (auto i : std::set<std::size_t>(evaluated.begin(), evaluated.end())) hit += reference.count(i);
    return static_cast<double>(hit) / static_cast<double>(reference.size());
}

/// Share of the pool's top-quantile candidates evaluated in the session
/// (initial points included).
inline double topk_coverage(const BOSession& s, const CandidatePool& pool, double quantile = 0.05) {
    if (!pool.labeled()) throw DataError("coverage needs a labeled pool");
    std::vector<std::size_t> evaluated;
    for (const auto& o : s.observed) evaluated.push_back(pool.index_of(o.id));
    return coverage_of(evaluated, reference_set(pool.y(), quantile));
}

/// Coverage after each observation, in acquisition order.
inline std::vector<double> coverage_trace(const BOSession& s, const CandidatePool& pool, double quantile = 0.05) {
    const auto ref = reference_set(pool.y(), quantile);
    std::vector<double> out;
    std::size_t hit = 0;
    for (const auto& o : s.observed) {
        hit += ref.count(pool.index_of(o.id));
        out.push_back(static_cast<double>(hit) / static_cast<double>(ref.size()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fit quality

/// Weighted coefficient of determination, 1 - sum w (y - f)^2 / sum w (y - ybar_w)^2.
/// Empty when y_true has zero (weighted) variance.
inline std::optional<double> weighted_r2_with(const Vector& y_true, const Vector& y_pred, const Vector& w) {
    if (y_true.size() != y_pred.size() || y_true.size() != w.size())
        throw DataError("r2: vectors differ in length");
    if (y_true.size() < 2) throw DataError("r2 needs at least two points");
    const double wsum = w.sum();
    const double mean = (w.array() * y_true.array()).sum() / wsum;
    const double ss_tot = (w.array() * (y_true.array() - mean).square()).sum();
    const double ss_res = (w.array() * (y_true - y_pred).array().square()).sum();
    if (!(ss_tot > 0.0)) return std::nullopt;
    return 1.0 - ss_res / ss_tot;
}

inline std::optional<double> r2(const Vector& y_true, const Vector& y_pred) {
    return weighted_r2_with(y_true, y_pred, Vector::Ones(y_true.size()));
}

/// R^2 with weight w_hi on the top-quantile points of y_true and w_lo elsewhere.
inline std::optional<double> weighted_r2(const Vector& y_true, const Vector& y_pred, double top_quantile = 0.05,
                                         double w_hi = 3.0, double w_lo = 1.0) {
    Vector w = Vector::Constant(y_true.size(), w_lo);
    for (auto i : reference_set(y_true, top_quantile)) w(static_cast<Eigen::Index>(i)) = w_hi;
    return weighted_r2_with(y_true, y_pred, w);
}

inline constexpr double kVarianceFloor = 1e-12;

struct NlpdResult {
    double value = 0.0;
    bool floored = false; // some predictive variance hit the floor
};

/// Mean negative log Gaussian density of y_true under (mean, variance).
/// Pass noise-inclusive variances on the raw objective scale.
inline NlpdResult nlpd(const Vector& y_true, const Vector& mean, const Vector& variance) {
    if (y_true.size() != mean.size() || y_true.size() != variance.size())
        throw DataError("nlpd: vectors differ in length");
    if (y_true.size() == 0) throw DataError("nlpd needs at least one point");
    NlpdResult r;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y_true.size(); ++i) {
        double v = variance(i);
        if (!(v > kVarianceFloor)) {
            v = kVarianceFloor;
            r.floored = true;
        }
        const double e = y_true(i) - mean(i);
        acc += 0.5 * (std::log(2.0 * std::numbers::pi * v) + e * e / v);
    }
    r.value = acc / static_cast<double>(y_true.size());
    return r;
}

inline NlpdResult nlpd(const Vector& y_true, const RawPredictive& pred) {
    return nlpd(y_true, pred.mean, pred.variance);
}

// ---------------------------------------------------------------------------
// Smoothness

struct PairwiseOptions {
    std::size_t exact_limit = 2000;        // exact mean up to this many rows
    std::size_t sampled_pairs = 2'000'000; // otherwise this many random pairs
    bool exclude_zero = false;             // drop coincident pairs
    std::uint64_t seed = 0;
};

inline double mean_pairwise_distance(const Matrix& Z, const PairwiseOptions& opt = {}) {
    const auto n = static_cast<std::size_t>(Z.rows());
    if (n < 2) throw DataError("mean pairwise distance needs at least two points");
    double sum = 0.0;
    std::size_t count = 0;
    auto add = [&](std::size_t i, std::size_t j) {
        const double d = (Z.row(static_cast<Eigen::Index>(i)) - Z.row(static_cast<Eigen::Index>(j))).norm();
        if (opt.exclude_zero && d == 0.0) return;
        sum += d;
        ++count;
    };
    if (n <= opt.exact_limit) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) add(i, j);
    } else {
        Rng rng = make_rng({opt.seed, stream::pairs});
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t k = 0; k < opt.sampled_pairs; ++k) {
            std::size_t i = pick(rng), j = pick(rng);
            while (j == i) j = pick(rng);
            add(i, j);
        }
    }
    if (count == 0) return 0.0;
    return sum / static_cast<double>(count);
}

/// Learned lengthscale over the mean pairwise distance of the pool in the
/// surrogate's feature space (raw embeddings, or g_phi(X) for deep surrogates).
inline double smoothness_ratio(const FittedSurrogate& fit, const Matrix& pool_X, const PairwiseOptions& opt = {}) {
    if (pool_X.rows() < 2) throw DataError("smoothness ratio needs at least two pool points");
    const double mean_d = mean_pairwise_distance(fit.features(pool_X), opt);
    if (mean_d <= 0.0) return std::numeric_limits<double>::infinity();
    return fit.theta().lengthscale() / mean_d;
}

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
    std::vector<double> edges; // bins + 1
    std::vector<std::size_t> counts;
};

inline Histogram histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
    Histogram h;
    if (bins == 0) throw DataError("histogram needs at least one bin");
    if (!(hi > lo)) hi = lo + 1.0;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    for (double v : values) {
        auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

/// CSV rows `family,bin_lo,bin_hi,count` for the three class-pair families on shared bins.
inline std::string class_pair_histogram_csv(const ClassPairStats& s, std::size_t bins = 30) {
    double hi = 0.0;
    for (const auto* f : {&s.high_high, &s.high_low, &s.low_low})
        if (*f)
            for (double d : (*f)->distances) hi = std::max(hi, d);
    std::string out = "family,bin_lo,bin_hi,count\n";
    auto emit = [&](const char* name, const std::optional<DistanceFamily>& f) {
        if (!f) return;
        const Histogram h = histogram(f->distances, bins, 0.0, hi);
        char buf[160];
        for (std::size_t b = 0; b < bins; ++b) {
            std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g,%zu\n", name, h.edges[b], h.edges[b + 1], h.counts[b]);
            out += buf;
        }
    };
    emit("high-high", s.high_high);
    emit("high-low", s.high_low);
    emit("low-low", s.low_low);
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation

struct MetricSummary {
    std::vector<double> values;
    double mean = 0.0;
    double stddev = 0.0; // sample (n - 1); 0 when n = 1
    std::size_t count = 0;
    bool single = false;
};

inline MetricSummary summarize_metric(std::vector<double> values) {
    MetricSummary m;
    m.count = values.size();
    if (values.empty()) return m;
    const double n = static_cast<double>(values.size());
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() == 1) {
        m.single = true;
    } else {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.stddev = std::sqrt(ss / (n - 1.0));
    }
    m.values = std::move(values);
    return m;
}

/// Per-metric mean and standard deviation over seeds.
struct MetricReport {
    std::map<std::string, MetricSummary> metrics;
};

inline MetricReport aggregate(const std::vector<std::map<std::string, double>>& per_seed) {
    if (per_seed.empty()) throw DataError("aggregate needs at least one seed");
    std::map<std::string, std::vector<double>> cols;
    for (const auto& row : per_seed)
        for (const auto& [k, v] : row) cols[k].push_back(v);
    MetricReport r;
    for (auto& [k, v] : cols) r.metrics[k] = summarize_metric(std::move(v));
    return r;
}

/// "label mean ± std" with three decimals.
inline std::string format_mean_std(const std::string& label, const MetricSummary& m) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.3f ± %.3f", m.mean, m.stddev);
    return label.empty() ? std::string(buf) : label + " " + buf;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw DataError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Average ranks (ties share the mean rank), 1-based.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw DataError("correlation needs two equal-length samples");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(ranks(a), ranks(b));
}

} // namespace dkbo
