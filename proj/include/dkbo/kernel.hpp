#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "dkbo/error.hpp"
#include "dkbo/pool.hpp"

namespace dkbo {

/// GP hyperparameters {lengthscale, signal variance, noise variance, constant mean}.
/// Positive quantities are stored as natural logs so unconstrained updates keep
/// them positive. The packed order is (log l, log s2, log sn2, c).
struct GPHyperparams {
    double log_lengthscale = 0.0;
    double log_signal_variance = 0.0;
    double log_noise_variance = std::log(1e-4);
    double mean = 0.0;

    static constexpr int size = 4;

    static GPHyperparams from_natural(double lengthscale, double signal_variance,
                                      double noise_variance, double mean_const = 0.0) {
        if (!(lengthscale > 0.0) || !(signal_variance > 0.0) || !(noise_variance > 0.0))
            throw DataError("lengthscale and variances must be strictly positive");
        return {std::log(lengthscale), std::log(signal_variance), std::log(noise_variance), mean_const};
    }

    /// l = 1, s2 = 1, sn2 = 1e-4, c = 0.
    static GPHyperparams defaults() { return from_natural(1.0, 1.0, 1e-4, 0.0); }

    double lengthscale() const { return std::exp(log_lengthscale); }
    double signal_variance() const { return std::exp(log_signal_variance); }
    double noise_variance() const { return std::exp(log_noise_variance); }

    Eigen::Vector4d packed() const {
        return {log_lengthscale, log_signal_variance, log_noise_variance, mean};
    }
    static GPHyperparams from_packed(const Eigen::Vector4d& p) { return {p(0), p(1), p(2), p(3)}; }

    friend bool operator==(const GPHyperparams&, const GPHyperparams&) = default;
};

/// Box in the unconstrained parameterization; optimizers project onto it.
struct HyperparamBounds {
    Eigen::Vector4d lower{std::log(1e-4), std::log(1e-4), std::log(1e-6), -1e3};
    Eigen::Vector4d upper{std::log(1e5), std::log(1e4), std::log(1e1), 1e3};

    Eigen::Vector4d clamp(const Eigen::Vector4d& p) const { return p.cwiseMax(lower).cwiseMin(upper); }
};

namespace detail {
inline const double kSqrt5 = std::sqrt(5.0);
} // namespace detail

/// Unit-variance Matern-5/2 profile as a function of u = d / l.
inline double matern52_profile(double u) {
    const double s = detail::kSqrt5 * u;
    return (1.0 + s + 5.0 * u * u / 3.0) * std::exp(-s);
}

inline double matern52(double distance, double lengthscale, double signal_variance) {
    return signal_variance * matern52_profile(distance / lengthscale);
}

/// k(a, b) = s2 (1 + sqrt5 d/l + 5 d^2 / (3 l^2)) exp(-sqrt5 d/l), d = |a - b|_2.
inline double matern52(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                       double lengthscale, double signal_variance) {
    if (a.size() != b.size()) throw DataError("matern52: vectors differ in dimension");
    return matern52((a - b).norm(), lengthscale, signal_variance);
}

/// Euclidean distances between all row pairs of Z (exact zero on the diagonal).
inline Matrix pairwise_distances(const Matrix& Z) {
    const Eigen::Index n = Z.rows();
    Matrix D = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (Z.row(i) - Z.row(j)).norm();
            D(i, j) = d;
            D(j, i) = d;
        }
    return D;
}

/// Distances from each row of A to each row of B.
inline Matrix cross_distances(const Matrix& A, const Matrix& B) {
    if (A.cols() != B.cols()) throw DataError("cross_distances: column count mismatch");
    Matrix D(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j) D(i, j) = (A.row(i) - B.row(j)).norm();
    return D;
}

inline Matrix matern52_from_distances(const Matrix& D, double lengthscale, double signal_variance) {
    return D.unaryExpr([&](double d) { return matern52(d, lengthscale, signal_variance); });
}

/// Noise-free kernel matrix plus the Cholesky factor of K + (sn2 + jitter) I.
struct KernelMatrix {
    Matrix K;
    double noise = 0.0;
    double jitter = 0.0;
    int jitter_rung = 0;
    Eigen::LLT<Matrix> chol;

    Matrix noisy() const {
        Matrix out = K;
        out.diagonal().array() += noise + jitter;
        return out;
    }
    Matrix lower() const { return chol.matrixL(); }
    double log_det() const { return 2.0 * chol.matrixLLT().diagonal().array().log().sum(); }
};

/// Jitter multipliers of the signal variance, tried in order until Cholesky succeeds.
inline constexpr std::array<double, 4> kJitterLadder{0.0, 1e-8, 1e-6, 1e-4};

inline KernelMatrix kernel_matrix_from_distances(const Matrix& D, const GPHyperparams& theta,
                                                 int first_rung = 0) {
    KernelMatrix km;
    const double s2 = theta.signal_variance();
    km.K = matern52_from_distances(D, theta.lengthscale(), s2);
    km.noise = theta.noise_variance();
    first_rung = std::clamp(first_rung, 0, static_cast<int>(kJitterLadder.size()) - 1);
    for (int rung = first_rung; rung < static_cast<int>(kJitterLadder.size()); ++rung) {
        km.jitter = kJitterLadder[static_cast<std::size_t>(rung)] * s2;
        km.jitter_rung = rung;
        km.chol.compute(km.noisy());
        if (km.chol.info() == Eigen::Success && km.chol.matrixLLT().diagonal().allFinite() &&
            (km.chol.matrixLLT().diagonal().array() > 0.0).all())
            return km;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(km.noisy(), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    throw SingularKernelError("kernel matrix is not positive definite at maximum jitter "
                              "(condition estimate " + std::to_string(cond) + ")",
                              cond);
}

inline KernelMatrix kernel_matrix(const Matrix& X, const GPHyperparams& theta, int first_rung = 0) {
    if (!X.allFinite()) throw DataError("kernel_matrix: inputs contain non-finite values");
    return kernel_matrix_from_distances(pairwise_distances(X), theta, first_rung);
}

} // namespace dkbo
