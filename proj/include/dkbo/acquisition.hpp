#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "dkbo/error.hpp"
#include "dkbo/random.hpp"
#include "dkbo/surrogate.hpp"

namespace dkbo {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// EI for maximization: (mu - f*) Phi(z) + s phi(z), z = (mu - f*) / s;
/// max(mu - f*, 0) when s = 0. Never negative.
inline double expected_improvement(double mean, double stddev, double f_best) {
    const double diff = mean - f_best;
    if (!(stddev > 0.0)) return std::max(diff, 0.0);
    const double z = diff / stddev;
    return std::max(diff * normal_cdf(z) + stddev * normal_pdf(z), 0.0);
}

/// EI of every query in `post` against `f_best` (both on the model scale),
/// using the latent (noise-free) predictive standard deviation.
inline std::vector<double> expected_improvement(const PosteriorGaussian& post, double f_best) {
    std::vector<double> out(static_cast<std::size_t>(post.size()));
    for (Eigen::Index i = 0; i < post.size(); ++i)
        out[static_cast<std::size_t>(i)] =
            expected_improvement(post.mean(i), std::sqrt(std::max(post.latent_variance(i), 0.0)), f_best);
    return out;
}

struct AcquisitionScore {
    std::size_t index = 0; // row in the pool
    double score = 0.0;
    double mean = 0.0;   // raw objective scale
    double stddev = 0.0; // raw objective scale, latent
};

enum class TieRule { random, first };

/// Absolute tolerance under which two EI scores count as tied.
inline constexpr double kTieTolerance = 1e-12;

/// Index of the maximal score; near-ties are broken uniformly under `rng`
/// (or by lowest position for TieRule::first). The rng is consulted only when
/// more than one candidate ties.
inline std::size_t argmax_with_ties(const std::vector<double>& scores, TieRule rule, Rng& rng) {
    if (scores.empty()) throw ExhaustedError("no candidates to select from");
    double best = scores[0];
    for (double s : scores) best = std::max(best, s);
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= best - kTieTolerance) tied.push_back(i);
    if (tied.size() == 1 || rule == TieRule::first) return tied.front();
    std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
    return tied[pick(rng)];
}

/// Scores every remaining pool row with EI under `fit` and returns the argmax.
/// `observed_best` is on the raw scale and is mapped through the surrogate's
/// standardizer before scoring.
inline AcquisitionScore select_next(const FittedSurrogate& fit, const Matrix& pool_X,
                                    const std::vector<std::size_t>& remaining, double observed_best, TieRule rule,
                                    Rng& rng, std::vector<double>* all_scores = nullptr) {
    if (remaining.empty()) throw ExhaustedError("candidate pool exhausted");
    Matrix Xq(static_cast<Eigen::Index>(remaining.size()), pool_X.cols());
    for (std::size_t r = 0; r < remaining.size(); ++r)
        Xq.row(static_cast<Eigen::Index>(r)) = pool_X.row(static_cast<Eigen::Index>(remaining[r]));
    const PosteriorGaussian post = fit.posterior(Xq);
    const double f_best = fit.standardizer().transform(observed_best);
    std::vector<double> scores = expected_improvement(post, f_best);
    const std::size_t k = argmax_with_ties(scores, rule, rng);
    const auto ki = static_cast<Eigen::Index>(k);
    AcquisitionScore out;
    out.index = remaining[k];
    out.score = scores[k];
    out.mean = fit.standardizer().inverse(post.mean(ki));
    out.stddev = std::sqrt(post.latent_variance(ki)) * fit.standardizer().y_std;
    if (all_scores) *all_scores = std::move(scores);
    return out;
}

/// Uniform choice among the remaining rows.
inline std::size_t random_select(const std::vector<std::size_t>& remaining, Rng& rng) {
    if (remaining.empty()) throw ExhaustedError("candidate pool exhausted");
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    return remaining[pick(rng)];
}

} // namespace dkbo
