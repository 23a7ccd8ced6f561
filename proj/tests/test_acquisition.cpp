#include <gtest/gtest.h>

#include <set>

#include "dkbo/acquisition.hpp"
#include "oracles.hpp"

using namespace dkbo;

namespace {

// EI by trapezoidal integration of max(f - f*, 0) against the normal density.
double ei_quadrature(double mu, double s, double fb) {
    const int K = 200000;
    const double lo = mu - 12.0 * s, hi = mu + 12.0 * s, h = (hi - lo) / K;
    double acc = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double f = lo + k * h;
        const double w = (k == 0 || k == K) ? 0.5 : 1.0;
        acc += w * std::max(f - fb, 0.0) * std::exp(-0.5 * (f - mu) * (f - mu) / (s * s));
    }
    return acc * h / (s * std::sqrt(2.0 * std::numbers::pi));
}

} // namespace

TEST(ExpectedImprovement, ZeroStdIsPositivePart) {
    EXPECT_EQ(expected_improvement(1.5, 0.0, 1.0), 0.5);
    EXPECT_EQ(expected_improvement(0.5, 0.0, 1.0), 0.0);
    EXPECT_EQ(expected_improvement(1.0, 0.0, 1.0), 0.0);
}

TEST(ExpectedImprovement, AtIncumbentEqualsStdTimesPdf) {
    for (double s : {0.1, 1.0, 3.0}) EXPECT_NEAR(expected_improvement(2.0, s, 2.0), s / std::sqrt(2.0 * std::numbers::pi), 1e-15);
}

TEST(ExpectedImprovement, MatchesQuadrature) {
    for (double diff : {-3.0, -1.0, -0.2, 0.0, 0.3, 1.0, 2.5})
        for (double s : {0.05, 0.5, 1.0, 2.0})
            EXPECT_NEAR(expected_improvement(diff, s, 0.0), ei_quadrature(diff, s, 0.0), 1e-7)
                << "diff " << diff << " s " << s;
}

TEST(ExpectedImprovement, MonotoneAndNonNegative) {
    double prev = 0.0;
    for (int k = -50; k <= 50; ++k) {
        const double v = expected_improvement(0.1 * k, 0.7, 0.0);
        EXPECT_GE(v, 0.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
    prev = 0.0;
    for (int k = 0; k <= 50; ++k) {
        const double v = expected_improvement(-0.5, 0.1 * k, 0.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_GE(expected_improvement(-40.0, 1.0, 0.0), 0.0);
}

TEST(ArgmaxTies, FirstRuleTakesLowestIndex) {
    Rng rng = make_rng({1});
    EXPECT_EQ(argmax_with_ties({0.1, 0.5, 0.5 - 1e-13, 0.2}, TieRule::first, rng), 1u);
}

TEST(ArgmaxTies, RandomRuleCoversAllTiedCandidates) {
    std::set<std::size_t> seen;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng rng = make_rng({s});
        const auto k = argmax_with_ties({0.3, 0.9, 0.1, 0.9 + 5e-13, 0.9}, TieRule::random, rng);
        EXPECT_TRUE(k == 1 || k == 3 || k == 4);
        seen.insert(k);
    }
    EXPECT_EQ(seen.size(), 3u);
}

TEST(ArgmaxTies, UniqueMaximumLeavesRngUntouched) {
    Rng a = make_rng({5}), b = make_rng({5});
    EXPECT_EQ(argmax_with_ties({0.2, 0.8, 0.3}, TieRule::random, a), 1u);
    EXPECT_EQ(a, b);
    std::vector<double> empty;
    EXPECT_THROW(argmax_with_ties(empty, TieRule::random, a), ExhaustedError);
}

TEST(SelectNext, ScoresOnlyRemainingAndMapsIncumbent) {
    Matrix X(5, 1);
    X << 0.0, 0.5, 1.0, 1.5, 2.0;
    Vector y(2);
    y << 10.0, 14.0;
    auto [z, st] = standardize_targets(y);
    Matrix Xtr(2, 1);
    Xtr << 0.0, 2.0;
    const FittedSurrogate fit(GPHyperparams::from_natural(0.7, 1.0, 1e-4), std::nullopt, st, {"a", "e"}, Xtr, z);
    Rng rng = make_rng({1});
    std::vector<double> scores;
    const std::vector<std::size_t> remaining{1, 2, 3};
    const auto best = select_next(fit, X, remaining, 14.0, TieRule::random, rng, &scores);
    ASSERT_EQ(scores.size(), 3u);
    const auto post = fit.posterior(X);
    for (std::size_t r = 0; r < 3; ++r) {
        const auto i = static_cast<Eigen::Index>(remaining[r]);
        EXPECT_NEAR(scores[r],
                    expected_improvement(post.mean(i), std::sqrt(post.latent_variance(i)), st.transform(14.0)), 1e-15);
    }
    EXPECT_EQ(best.index, 3u); // next to the better observation
    EXPECT_NEAR(best.mean, fit.predict_raw(X.row(3), false).mean(0), 1e-12);
    EXPECT_THROW(select_next(fit, X, {}, 14.0, TieRule::random, rng), ExhaustedError);
}

TEST(RandomSelect, UniformOverRemaining) {
    Rng rng = make_rng({2});
    std::map<std::size_t, int> counts;
    const std::vector<std::size_t> rem{3, 7, 9};
    for (int k = 0; k < 3000; ++k) ++counts[random_select(rem, rng)];
    ASSERT_EQ(counts.size(), 3u);
    for (auto [i, c] : counts) EXPECT_NEAR(c, 1000, 120);
}
