#include <gtest/gtest.h>

#include "dkbo/deep_kernel.hpp"
#include "dkbo/synthetic.hpp"
#include "oracles.hpp"

using namespace dkbo;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = N(rng);
    return M;
}

double rel_err(double a, double f) { return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-3}); }

} // namespace

TEST(Projection, XavierInitIsBoundedAndSeeded) {
    const auto p = init_projection(16, 64, 7);
    const double bound = std::sqrt(6.0 / 80.0);
    EXPECT_EQ(p.weight.rows(), 64);
    EXPECT_EQ(p.weight.cols(), 16);
    EXPECT_LE(p.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(p.weight.cwiseAbs().maxCoeff(), 0.9 * bound);
    EXPECT_EQ(p.bias, Vector::Zero(64));
    EXPECT_EQ(p, init_projection(16, 64, 7));
    EXPECT_FALSE(p == init_projection(16, 64, 8));
    EXPECT_THROW(init_projection(0, 4, 1), DataError);
    EXPECT_THROW(init_projection(3, 4, 1, 1.0), DataError);
}

TEST(Projection, EluAndDerivative) {
    EXPECT_EQ(elu(2.0), 2.0);
    EXPECT_NEAR(elu(-1.0), std::exp(-1.0) - 1.0, 1e-16);
    EXPECT_NEAR(elu_derivative(-0.5), std::exp(-0.5), 1e-16);
    for (double x : {-2.0, -0.3, 0.4, 1.7})
        EXPECT_NEAR(elu_derivative(x), oracle::central_diff([](double v) { return elu(v); }, x, 1e-6), 1e-8);
}

TEST(Projection, ForwardMatchesLoops) {
    Rng rng = make_rng({1});
    auto p = init_projection(3, 5, 2);
    p.bias = gaussian(5, 1, rng).col(0);
    const Matrix X = gaussian(4, 3, rng);
    const Matrix Z = project(p, X);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 5; ++k) {
            double a = p.bias(k);
            for (int j = 0; j < 3; ++j) a += p.weight(k, j) * X(i, j);
            EXPECT_NEAR(Z(i, k), a > 0 ? a : std::exp(a) - 1.0, 1e-14);
        }
}

TEST(Projection, InvertedDropoutMask) {
    Rng rng = make_rng({3});
    const Matrix m = sample_dropout_mask(200, 50, 0.1, rng);
    const double keep = 1.0 / 0.9;
    for (Eigen::Index i = 0; i < m.size(); ++i) EXPECT_TRUE(m.data()[i] == 0.0 || m.data()[i] == keep);
    EXPECT_NEAR(m.mean(), 1.0, 0.03);
    Rng r2 = make_rng({3});
    EXPECT_THROW(project(init_projection(2, 3, 1), Matrix::Zero(1, 2), true, nullptr), DataError);
    EXPECT_EQ(project(init_projection(2, 3, 1, 0.0), Matrix::Ones(1, 2), true, &r2),
              project(init_projection(2, 3, 1, 0.0), Matrix::Ones(1, 2)));
}

TEST(Projection, BackwardMatchesFiniteDifferences) {
    Rng rng = make_rng({4});
    auto p = init_projection(3, 4, 5, 0.25);
    p.bias = 0.3 * gaussian(4, 1, rng).col(0);
    const Matrix X = gaussian(6, 3, rng);
    const Matrix mask = sample_dropout_mask(6, 4, 0.25, rng);
    const Matrix G = gaussian(6, 4, rng); // loss = <G, Z>
    ProjectionCache cache;
    project_forward(p, X, &mask, &cache);
    const ProjectionGrad g = project_backward(X, cache, G);
    auto loss = [&](const ProjectionMap& q) { return project_forward(q, X, &mask).cwiseProduct(G).sum(); };
    for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < 3; ++j) {
            auto f = [&](double v) {
                auto q = p;
                q.weight(k, j) = v;
                return loss(q);
            };
            EXPECT_NEAR(g.weight(k, j), oracle::central_diff(f, p.weight(k, j), 1e-6), 1e-7);
        }
        auto fb = [&](double v) {
            auto q = p;
            q.bias(k) = v;
            return loss(q);
        };
        EXPECT_NEAR(g.bias(k), oracle::central_diff(fb, p.bias(k), 1e-6), 1e-7);
    }
}

TEST(JointGradient, MatchesFiniteDifferencesWithDropoutMask) {
    Rng rng = make_rng({5});
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::Index n = 6 + rep, d = 2 + rep % 4, m = 1 + rep % 4;
        const Matrix X = gaussian(n, d, rng);
        const Vector y = gaussian(n, 1, rng).col(0);
        auto phi = init_projection(d, m, static_cast<std::uint64_t>(rep), 0.2);
        phi.bias = 0.2 * gaussian(m, 1, rng).col(0);
        const GPHyperparams t = GPHyperparams::from_natural(1.1, 0.8, 0.01, 0.05);
        const Matrix mask = sample_dropout_mask(n, m, 0.2, rng);
        const auto g = joint_mll_grad(X, y, t, phi, &mask);
        EXPECT_NEAR(g.value, joint_mll(X, y, t, phi, &mask), 1e-10);
        for (int k = 0; k < 4; ++k) {
            auto f = [&](double v) {
                Eigen::Vector4d pk = t.packed();
                pk(k) = v;
                return joint_mll(X, y, GPHyperparams::from_packed(pk), phi, &mask);
            };
            const double fd = oracle::central_diff(f, t.packed()(k), 1e-5);
            EXPECT_LT(rel_err(g.theta(k), fd), 1e-4) << "theta " << k;
        }
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < d; ++b) {
                auto f = [&](double v) {
                    auto q = phi;
                    q.weight(a, b) = v;
                    return joint_mll(X, y, t, q, &mask);
                };
                EXPECT_LT(rel_err(g.phi.weight(a, b), oracle::central_diff(f, phi.weight(a, b), 1e-6)), 1e-4);
            }
    }
}

namespace {

struct Problem {
    Matrix X;
    Vector y;
};

Problem clusters(std::uint64_t seed, std::size_t n = 40) {
    SyntheticSpec sp;
    sp.n = n;
    sp.d = 6;
    sp.seed = seed;
    const auto pool = generate(sp);
    return {pool.X(), pool.y()};
}

} // namespace

TEST(JointFit, ZeroEpochsReturnsInitialParameters) {
    const auto pr = clusters(1);
    const auto phi0 = init_projection(6, 8, 3);
    TrainConfig tc;
    tc.epochs = 0;
    const auto fit = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), tc);
    EXPECT_EQ(fit.surrogate.theta(), GPHyperparams::defaults());
    EXPECT_EQ(*fit.surrogate.projection(), phi0);
    EXPECT_EQ(fit.best_epoch, 0);
    EXPECT_EQ(fit.trace.size(), 1u);
}

TEST(JointFit, ReturnsBestEvalIterateAndImproves) {
    const auto pr = clusters(2);
    const auto phi0 = init_projection(6, 16, 4);
    TrainConfig tc;
    tc.seed = 9;
    const auto fit = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), tc);
    ASSERT_EQ(fit.trace.size(), 101u);
    double best = -INFINITY;
    for (const auto& r : fit.trace) {
        best = std::max(best, r.mll_eval);
        EXPECT_DOUBLE_EQ(r.best_mll, best);
        EXPECT_LE(r.grad_norm, tc.clip_norm + 1e-12);
    }
    EXPECT_NEAR(fit.surrogate.mll(), best, 1e-9 * std::abs(best));
    EXPECT_GT(best, fit.trace.front().mll_eval);
    EXPECT_FALSE(fit.aborted);
}

TEST(JointFit, LearningRatesDecayEveryTenSteps) {
    const auto pr = clusters(3);
    TrainConfig tc;
    tc.epochs = 25;
    const auto fit = joint_fit(pr.X, pr.y, init_projection(6, 4, 1), GPHyperparams::defaults(), tc);
    EXPECT_DOUBLE_EQ(fit.trace[10].lr_gp, 0.2);
    EXPECT_DOUBLE_EQ(fit.trace[11].lr_gp, 0.2 * 0.95);
    EXPECT_DOUBLE_EQ(fit.trace[21].lr_feat, 2e-3 * 0.95 * 0.95);
}

TEST(JointFit, FrozenFeatureLearningRateKeepsProjection) {
    // Decoupled weight decay scales with the feature learning rate, so lr_feat = 0
    // must leave the projection untouched while the GP hyperparameters move.
    const auto pr = clusters(4);
    const auto phi0 = init_projection(6, 8, 2);
    TrainConfig tc;
    tc.lr_feat = 0.0;
    const auto fit = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), tc);
    EXPECT_EQ(*fit.surrogate.projection(), phi0);
    EXPECT_FALSE(fit.surrogate.theta() == GPHyperparams::defaults());
}

TEST(JointFit, WeightDecayShrinksProjectionOnly) {
    const auto pr = clusters(5);
    auto phi0 = init_projection(6, 8, 2, 0.0);
    TrainConfig a, b;
    a.epochs = b.epochs = 20;
    a.lr_gp = b.lr_gp = 0.0;
    b.weight_decay = 50.0;
    const auto fa = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), a);
    const auto fb = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), b);
    EXPECT_EQ(fa.surrogate.theta(), GPHyperparams::defaults());
    EXPECT_EQ(fb.surrogate.theta(), GPHyperparams::defaults());
    if (fb.best_epoch > 0) {
        EXPECT_LT(fb.surrogate.projection()->weight.norm(), phi0.weight.norm());
    }
}

TEST(JointFit, DeterministicForSeed) {
    const auto pr = clusters(6);
    const auto phi0 = init_projection(6, 8, 2);
    TrainConfig tc;
    tc.seed = 11;
    const auto a = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), tc);
    const auto b = joint_fit(pr.X, pr.y, phi0, GPHyperparams::defaults(), tc);
    EXPECT_EQ(a.surrogate.theta(), b.surrogate.theta());
    EXPECT_EQ(*a.surrogate.projection(), *b.surrogate.projection());
}

TEST(JointFit, HyperparametersStayInBounds) {
    const auto pr = clusters(7);
    TrainConfig tc;
    tc.lr_gp = 5.0;
    const auto fit = joint_fit(pr.X, pr.y, init_projection(6, 8, 2), GPHyperparams::defaults(), tc);
    const Eigen::Vector4d p = fit.surrogate.theta().packed();
    EXPECT_TRUE((p.array() >= tc.bounds.lower.array()).all());
    EXPECT_TRUE((p.array() <= tc.bounds.upper.array()).all());
}

TEST(JointFit, RejectsBadInputs) {
    const auto pr = clusters(8);
    EXPECT_THROW(joint_fit(pr.X, pr.y, init_projection(5, 4, 1)), DataError);
    EXPECT_THROW(joint_fit(pr.X.topRows(1), pr.y.head(1), init_projection(6, 4, 1)), DataError);
    TrainConfig tc;
    tc.clip_norm = 0.0;
    EXPECT_THROW(joint_fit(pr.X, pr.y, init_projection(6, 4, 1), GPHyperparams::defaults(), tc), ConfigError);
}

TEST(ContrastiveTrace, SnapshotsAtRequestedEpochs) {
    const auto pr = clusters(9, 60);
    TrainConfig tc;
    tc.snapshot_epochs = {0, 50, 100};
    const auto fit = joint_fit(pr.X, pr.y, init_projection(6, 16, 1), GPHyperparams::defaults(), tc);
    const auto tr = contrastive_trace(fit, pr.X, pr.y);
    ASSERT_EQ(tr.size(), 3u);
    EXPECT_EQ(tr[0].epoch, 0);
    EXPECT_EQ(tr[2].epoch, 100);
    for (const auto& s : tr) {
        ASSERT_TRUE(s.score);
        EXPECT_EQ(s.stats.high.size(), 6u);
        EXPECT_EQ(s.stats.low.size(), 6u);
    }
}

TEST(Separation, TwoPointClasses) {
    Matrix Z(4, 2);
    Z << 0, 0, 0, 0, 3, 4, 3, 4;
    Vector y(4);
    y << 1, 1, 0, 0;
    const auto s = class_pair_distances(Z, y, 0.5, 0.5);
    ASSERT_TRUE(s.high_low && s.high_high && s.low_low);
    EXPECT_DOUBLE_EQ(s.high_low->mean, 5.0);
    EXPECT_DOUBLE_EQ(s.high_high->mean, 0.0);
    EXPECT_DOUBLE_EQ(s.low_low->median, 0.0);
    EXPECT_TRUE(std::isinf(*separation_score(s)));
}

TEST(Separation, SmallClassesHaveNoFamily) {
    Matrix Z = Matrix::Identity(5, 5);
    Vector y(5);
    y << 5, 4, 3, 2, 1;
    const auto s = class_pair_distances(Z, y, 0.2, 0.2);
    EXPECT_EQ(s.high.size(), 1u);
    EXPECT_FALSE(s.high_high);
    EXPECT_FALSE(s.low_low);
    ASSERT_TRUE(s.high_low);
    EXPECT_FALSE(separation_score(s));
    EXPECT_THROW(class_pair_distances(Z, y, 0.7, 0.5), DataError);
}

TEST(Separation, ConstantLabelsFormOneClass) {
    const auto s = class_pair_distances(Matrix::Identity(4, 4), Vector::Ones(4));
    EXPECT_EQ(s.high.size(), 4u);
    EXPECT_TRUE(s.low.empty());
    EXPECT_FALSE(s.high_low);
}
