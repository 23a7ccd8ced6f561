#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "dkbo/kernel.hpp"

namespace dkbo {

/// Log marginal likelihood and its gradient.
/// `theta` is with respect to (log l, log s2, log sn2, c); `features` is dL/dZ
/// (n x p) when requested, otherwise empty.
struct MllGradient {
    double value = 0.0;
    Eigen::Vector4d theta = Eigen::Vector4d::Zero();
    Matrix features;
    int jitter_rung = 0;
};

namespace detail {

inline double mll_value(const KernelMatrix& km, const Vector& resid, const Vector& alpha) {
    const double n = static_cast<double>(resid.size());
    return -0.5 * (resid.dot(alpha) + km.log_det() + n * std::log(2.0 * std::numbers::pi));
}

/// Core evaluation on a precomputed distance matrix. When `Z` is non-null the
/// feature gradient dL/dZ is also produced.
inline MllGradient mll_grad_from_distances(const Matrix& D, const Vector& y, const GPHyperparams& theta,
                                           const Matrix* Z, int first_rung = 0) {
    const Eigen::Index n = D.rows();
    if (y.size() != n) throw DataError("mll: target count does not match input rows");
    const KernelMatrix km = kernel_matrix_from_distances(D, theta, first_rung);
    const Vector resid = y.array() - theta.mean;
    const Vector alpha = km.chol.solve(resid);

    MllGradient out;
    out.jitter_rung = km.jitter_rung;
    out.value = mll_value(km, resid, alpha);

    // dL/dp = 1/2 tr((a a^T - K^-1) dK/dp)
    const Matrix Kinv = km.chol.solve(Matrix::Identity(n, n));
    const Matrix W = alpha * alpha.transpose() - Kinv;

    const double l = theta.lengthscale();
    const double s2 = theta.signal_variance();
    const double sn2 = theta.noise_variance();
    const double trW = W.trace();

    double d_log_l = 0.0;
    Matrix A;
    if (Z) A.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = D(i, j) / l;
            const double s = kSqrt5 * u;
            const double e = std::exp(-s);
            // dK/dlog l = s2 (5 u^2 / 3)(1 + sqrt5 u) exp(-sqrt5 u)
            d_log_l += W(i, j) * s2 * (5.0 * u * u / 3.0) * (1.0 + s) * e;
            // (dK/dr) / r, finite at r = 0
            if (Z) A(i, j) = W(i, j) * (-s2 * 5.0 / (3.0 * l * l) * (1.0 + s) * e);
        }
    }
    out.theta(0) = 0.5 * d_log_l;
    out.theta(1) = 0.5 * ((W.array() * km.K.array()).sum() + km.jitter * trW);
    out.theta(2) = 0.5 * sn2 * trW;
    out.theta(3) = alpha.sum();

    if (Z) {
        if (Z->rows() != n) throw DataError("mll: feature rows do not match distances");
        A.diagonal().setZero();
        // dL/dz_i = sum_k A_ik (z_i - z_k)
        out.features = A.rowwise().sum().asDiagonal() * (*Z) - A * (*Z);
    }
    return out;
}

} // namespace detail

/// -1/2 (r^T K^-1 r + log|K| + n log 2pi) with r = y - c and K the noisy Matern-5/2 matrix.
inline double mll(const Matrix& X, const Vector& y, const GPHyperparams& theta) {
    if (y.size() != X.rows()) throw DataError("mll: target count does not match input rows");
    const KernelMatrix km = kernel_matrix(X, theta);
    const Vector resid = y.array() - theta.mean;
    return detail::mll_value(km, resid, km.chol.solve(resid));
}

inline double mll_from_distances(const Matrix& D, const Vector& y, const GPHyperparams& theta,
                                 int first_rung = 0) {
    const KernelMatrix km = kernel_matrix_from_distances(D, theta, first_rung);
    const Vector resid = y.array() - theta.mean;
    return detail::mll_value(km, resid, km.chol.solve(resid));
}

/// Gradient of mll over the unconstrained hyperparameters; optionally also dL/dX.
inline MllGradient mll_grad(const Matrix& X, const Vector& y, const GPHyperparams& theta,
                            bool feature_grad = false) {
    if (!X.allFinite()) throw DataError("mll_grad: inputs contain non-finite values");
    return detail::mll_grad_from_distances(pairwise_distances(X), y, theta, feature_grad ? &X : nullptr);
}

} // namespace dkbo
