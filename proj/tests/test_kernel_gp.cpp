#include <gtest/gtest.h>

#include "dkbo/fit.hpp"
#include "dkbo/synthetic.hpp"
#include "oracles.hpp"

using namespace dkbo;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = N(rng);
    return M;
}

Vector random_vector(Eigen::Index n, Rng& rng) { return random_matrix(n, 1, rng).col(0); }

GPHyperparams random_theta(Rng& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    return {std::log(1.5) + U(rng), 0.5 * U(rng), std::log(1e-2) + U(rng), 0.3 * U(rng)};
}

} // namespace

TEST(Matern52, ClosedFormValues) {
    EXPECT_DOUBLE_EQ(matern52(0.0, 1.3, 2.5), 2.5);
    const double s5 = std::sqrt(5.0);
    EXPECT_NEAR(matern52(2.0, 2.0, 1.0), (1.0 + s5 + 5.0 / 3.0) * std::exp(-s5), 1e-15);
    for (double r : {0.01, 0.3, 1.0, 4.0}) EXPECT_NEAR(matern52(r, 0.7, 1.9), oracle::matern52(r, 0.7, 1.9), 1e-15);
}

TEST(Matern52, DecreasingInDistance) {
    double prev = matern52(0.0, 1.0, 1.0);
    for (int k = 1; k < 100; ++k) {
        const double v = matern52(0.05 * k, 1.0, 1.0);
        EXPECT_LT(v, prev);
        EXPECT_GT(v, 0.0);
        prev = v;
    }
}

TEST(KernelMatrix, SymmetricPositiveDefinite) {
    Rng rng = make_rng({1});
    const Matrix X = random_matrix(15, 3, rng);
    const auto km = kernel_matrix(X, GPHyperparams::from_natural(0.8, 1.3, 1e-3));
    EXPECT_LT((km.K - km.K.transpose()).norm(), 1e-14);
    EXPECT_EQ(km.jitter_rung, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(km.noisy());
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_NEAR((km.lower() * km.lower().transpose() - km.noisy()).norm(), 0.0, 1e-12);
}

TEST(KernelMatrix, CrossDistancesMatchLoops) {
    Rng rng = make_rng({2});
    const Matrix A = random_matrix(4, 3, rng), B = random_matrix(6, 3, rng);
    const Matrix D = cross_distances(A, B);
    ASSERT_EQ(D.rows(), 4);
    ASSERT_EQ(D.cols(), 6);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(D(i, j), oracle::dist(A, i, B, j), 1e-13);
    const Matrix P = pairwise_distances(A);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(P(i, i), 0.0);
}

TEST(KernelMatrix, DuplicateRowsClimbTheJitterLadder) {
    Matrix X(3, 2);
    X << 0.5, 0.5, 0.5, 0.5, 1.0, 0.0;
    GPHyperparams t = GPHyperparams::from_natural(1.0, 1.0, 1.0);
    t.log_noise_variance = -800.0; // exp underflows to 0: no noise at all
    const auto km = kernel_matrix(X, t);
    EXPECT_GT(km.jitter_rung, 0);
    EXPECT_TRUE(std::isfinite(km.log_det()));
}

TEST(KernelMatrix, SingularErrorCarriesConditionEstimate) {
    Matrix D = Matrix::Zero(2, 2);
    D(0, 1) = D(1, 0) = 1.0;
    GPHyperparams t = GPHyperparams::from_natural(1.0, 1.0, 1.0);
    t.log_signal_variance = std::log(-1.0); // NaN poisons every rung
    EXPECT_THROW(kernel_matrix_from_distances(D, t), SingularKernelError);
}

TEST(Mll, MatchesNaiveDenseInverse) {
    Rng rng = make_rng({3});
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index n = 2 + rep % 19, d = 1 + rep % 5;
        const Matrix X = random_matrix(n, d, rng);
        const Vector y = random_vector(n, rng);
        const GPHyperparams t = random_theta(rng);
        const double ref = oracle::mll(X, y, t.lengthscale(), t.signal_variance(), t.noise_variance(), t.mean);
        EXPECT_NEAR(mll(X, y, t), ref, 1e-8 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Mll, HyperparameterGradientMatchesFiniteDifferences) {
    Rng rng = make_rng({4});
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index n = 3 + rep % 10, d = 1 + rep % 4;
        const Matrix X = random_matrix(n, d, rng);
        const Vector y = random_vector(n, rng);
        const GPHyperparams t = random_theta(rng);
        const auto g = mll_grad(X, y, t);
        EXPECT_NEAR(g.value, mll(X, y, t), 1e-10);
        for (int k = 0; k < 4; ++k) {
            auto f = [&](double v) {
                Eigen::Vector4d p = t.packed();
                p(k) = v;
                return mll(X, y, GPHyperparams::from_packed(p));
            };
            const double fd = oracle::central_diff(f, t.packed()(k), 1e-5);
            EXPECT_NEAR(g.theta(k), fd, std::max(1e-5 * std::abs(fd), 1e-6)) << "param " << k << " rep " << rep;
        }
    }
}

TEST(Mll, FeatureGradientMatchesFiniteDifferences) {
    Rng rng = make_rng({5});
    const Matrix X = random_matrix(7, 3, rng);
    const Vector y = random_vector(7, rng);
    const GPHyperparams t = GPHyperparams::from_natural(1.2, 0.9, 0.05, 0.1);
    const auto g = mll_grad(X, y, t, true);
    ASSERT_EQ(g.features.rows(), 7);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 3; ++j) {
            auto f = [&](double v) {
                Matrix Xp = X;
                Xp(i, j) = v;
                return mll(Xp, y, t);
            };
            const double fd = oracle::central_diff(f, X(i, j), 1e-6);
            EXPECT_NEAR(g.features(i, j), fd, std::max(1e-5 * std::abs(fd), 1e-6));
        }
}

TEST(Posterior, MatchesNaiveDenseInverse) {
    Rng rng = make_rng({6});
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::Index n = 5 + rep, d = 2;
        const Matrix X = random_matrix(n, d, rng), Xq = random_matrix(9, d, rng);
        const Vector y = random_vector(n, rng);
        const GPHyperparams t = random_theta(rng);
        const FittedSurrogate s(t, std::nullopt, Standardizer::identity(), {}, X, y);
        const auto p = s.posterior(Xq);
        const auto ref = oracle::posterior(X, y, Xq, t.lengthscale(), t.signal_variance(), t.noise_variance(), t.mean);
        EXPECT_LT((p.mean - ref.mean).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT((p.latent_variance - ref.var.cwiseMax(0.0)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_NEAR(s.mll(), oracle::mll(X, y, t.lengthscale(), t.signal_variance(), t.noise_variance(), t.mean),
                    1e-8 * std::max(1.0, std::abs(s.mll())));
    }
}

TEST(Posterior, RawScaleUndoesStandardization) {
    Rng rng = make_rng({7});
    const Matrix X = random_matrix(8, 2, rng);
    const Vector y = (random_vector(8, rng).array() * 5.0 + 20.0).matrix();
    auto [z, st] = standardize_targets(y);
    const GPHyperparams t = GPHyperparams::from_natural(1.0, 1.0, 0.01);
    const FittedSurrogate s(t, std::nullopt, st, {}, X, z);
    const auto post = s.posterior(X);
    const auto raw = s.predict_raw(X, true);
    for (Eigen::Index i = 0; i < 8; ++i) {
        EXPECT_NEAR(raw.mean(i), st.y_mean + st.y_std * post.mean(i), 1e-12);
        EXPECT_NEAR(raw.variance(i), (post.latent_variance(i) + t.noise_variance()) * st.y_std * st.y_std, 1e-12);
    }
}

TEST(Posterior, JsonRoundTrip) {
    Rng rng = make_rng({8});
    const Matrix X = random_matrix(6, 2, rng);
    Vector y = random_vector(6, rng);
    std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
    const CandidatePool pool(ids, X, y);
    auto [z, st] = standardize_targets(y);
    const FittedSurrogate s(GPHyperparams::from_natural(0.9, 1.1, 0.02, 0.1), std::nullopt, st, ids, X, z);
    const FittedSurrogate r = surrogate_from_json(nlohmann::json::parse(s.to_json().dump()), pool);
    EXPECT_EQ(r.theta(), s.theta());
    EXPECT_NEAR(r.mll(), s.mll(), 1e-12);
    const Matrix Xq = random_matrix(3, 2, rng);
    EXPECT_LT((r.posterior(Xq).mean - s.posterior(Xq).mean).norm(), 1e-12);
}

TEST(FitFixed, NeverWorseThanStartAndWithinBounds) {
    Rng rng = make_rng({9});
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix X = random_matrix(25, 3, rng);
        const Vector y = (X.col(0).array().sin() + 0.1 * random_vector(25, rng).array()).matrix();
        FixedFitOptions o;
        o.seed = static_cast<std::uint64_t>(rep);
        const auto fit = fit_fixed(X, y, GPHyperparams::defaults(), o);
        const auto [z, st] = standardize_targets(y);
        EXPECT_GE(fit.mll(), mll(X, z, GPHyperparams::defaults()) - 1e-12);
        const Eigen::Vector4d p = fit.theta().packed();
        EXPECT_TRUE((p.array() >= o.bounds.lower.array()).all());
        EXPECT_TRUE((p.array() <= o.bounds.upper.array()).all());
    }
}

TEST(FitFixed, DeterministicForSeed) {
    Rng rng = make_rng({10});
    const Matrix X = random_matrix(20, 2, rng);
    const Vector y = random_vector(20, rng);
    FixedFitOptions o;
    o.seed = 42;
    EXPECT_EQ(fit_fixed(X, y, GPHyperparams::defaults(), o).theta(), fit_fixed(X, y, GPHyperparams::defaults(), o).theta());
}

TEST(FitFixed, RecoversLengthscaleOfGpDraw) {
    // Fixture shared with the generator: y drawn from a Matern-5/2 GP with l* = 1.5.
    std::vector<double> ratios;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticSpec sp;
        sp.generator = Generator::gp_draw;
        sp.n = 60;
        sp.d = 2;
        sp.lengthscale = 1.5;
        sp.signal_variance = 1.0;
        sp.noise = 0.01;
        sp.seed = seed;
        const auto pool = generate(sp);
        FixedFitOptions o;
        o.seed = seed;
        ratios.push_back(fit_fixed(pool.X(), pool.y(), GPHyperparams::defaults(), o).theta().lengthscale() / 1.5);
    }
    std::sort(ratios.begin(), ratios.end());
    const double med = 0.5 * (ratios[4] + ratios[5]);
    EXPECT_GT(med, 0.6);
    EXPECT_LT(med, 1.6);
}

TEST(Bfgs, MaximizesConcaveQuadraticInsideBox) {
    HyperparamBounds b;
    b.lower = Eigen::Vector4d::Constant(-10);
    b.upper = Eigen::Vector4d::Constant(10);
    const Eigen::Vector4d target(1.0, -2.0, 0.5, 3.0);
    auto eval = [&](const Eigen::Vector4d& x, double& f, Eigen::Vector4d& g) {
        f = -(x - target).squaredNorm();
        g = -2.0 * (x - target);
        return true;
    };
    const auto r = maximize_bfgs(eval, Eigen::Vector4d::Zero(), b, 200);
    EXPECT_TRUE(r.ok);
    EXPECT_LT((r.x - target).norm(), 1e-5);
    // Active bound: the optimum lies outside the box in coordinate 3.
    b.upper(3) = 2.0;
    const auto c = maximize_bfgs(eval, Eigen::Vector4d::Zero(), b, 200);
    EXPECT_NEAR(c.x(3), 2.0, 1e-9);
    EXPECT_NEAR(c.x(0), 1.0, 1e-5);
}
