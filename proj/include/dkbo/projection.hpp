#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dkbo/pool.hpp"
#include "dkbo/random.hpp"

namespace dkbo {

/// Feature map z = ELU(Dropout(W x + b)) applied row-wise to embeddings.
/// W is m x d (output x input).
struct ProjectionMap {
    Matrix weight;
    Vector bias;
    double dropout_rate = 0.1;

    Eigen::Index in_dim() const { return weight.cols(); }
    Eigen::Index out_dim() const { return weight.rows(); }
    bool finite() const { return weight.allFinite() && bias.allFinite(); }

    friend bool operator==(const ProjectionMap& a, const ProjectionMap& b) {
        return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
               a.weight == b.weight && a.bias == b.bias && a.dropout_rate == b.dropout_rate;
    }
};

inline constexpr Eigen::Index kDefaultProjectionWidth = 64;

/// Xavier-uniform weights on [-sqrt(6/(d+m)), sqrt(6/(d+m))], zero bias.
inline ProjectionMap init_projection(Eigen::Index d, Eigen::Index m, std::uint64_t seed,
                                     double dropout_rate = 0.1) {
    if (d < 1 || m < 1) throw DataError("projection dimensions must be at least 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw DataError("dropout rate must be in [0, 1)");
    const double bound = std::sqrt(6.0 / static_cast<double>(d + m));
    Rng rng = make_rng({seed, stream::projection});
    std::uniform_real_distribution<double> unif(-bound, bound);
    ProjectionMap p;
    p.weight.resize(m, d);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < d; ++j) p.weight(i, j) = unif(rng);
    p.bias = Vector::Zero(m);
    p.dropout_rate = dropout_rate;
    return p;
}

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

/// Inverted-dropout multipliers: 0 with probability `rate`, else 1/(1-rate).
inline Matrix sample_dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
    Matrix mask(rows, cols);
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = keep(rng) ? scale : 0.0;
    return mask;
}

/// Intermediate values kept for the backward pass.
struct ProjectionCache {
    Matrix preactivation; // after dropout
    Matrix mask;          // empty when dropout was not applied
};

struct ProjectionGrad {
    Matrix weight;
    Vector bias;
};

/// Forward pass with an explicit dropout mask (nullptr = evaluation mode).
inline Matrix project_forward(const ProjectionMap& phi, const Matrix& X, const Matrix* mask = nullptr,
                              ProjectionCache* cache = nullptr) {
    if (X.cols() != phi.in_dim())
        throw DataError("projection expects " + std::to_string(phi.in_dim()) + " input columns, got " +
                        std::to_string(X.cols()));
    Matrix pre = X * phi.weight.transpose();
    pre.rowwise() += phi.bias.transpose();
    if (mask) pre.array() *= mask->array();
    Matrix Z = pre.unaryExpr([](double v) { return elu(v); });
    if (cache) {
        cache->preactivation = std::move(pre);
        cache->mask = mask ? *mask : Matrix();
    }
    return Z;
}

/// Evaluation mode is deterministic; training mode draws an inverted-dropout
/// mask from `rng` when the dropout rate is positive.
inline Matrix project(const ProjectionMap& phi, const Matrix& X, bool training = false, Rng* rng = nullptr) {
    if (training && phi.dropout_rate > 0.0) {
        if (!rng) throw DataError("training-mode projection with dropout needs an rng");
        const Matrix mask = sample_dropout_mask(X.rows(), phi.out_dim(), phi.dropout_rate, *rng);
        return project_forward(phi, X, &mask);
    }
    return project_forward(phi, X);
}

/// Chain rule from dL/dZ back to W and b.
inline ProjectionGrad project_backward(const Matrix& X, const ProjectionCache& cache, const Matrix& dZ) {
    Matrix dpre = dZ.cwiseProduct(cache.preactivation.unaryExpr([](double v) { return elu_derivative(v); }));
    if (cache.mask.size() > 0) dpre.array() *= cache.mask.array();
    return {dpre.transpose() * X, dpre.colwise().sum().transpose()};
}

} // namespace dkbo
