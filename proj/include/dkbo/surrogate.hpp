#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/gp.hpp"
#include "dkbo/projection.hpp"

namespace dkbo {

/// Per-query Gaussian predictive distribution on the model (standardized) scale.
struct PosteriorGaussian {
    Vector mean;
    Vector latent_variance; // clamped at 0
    double noise_variance = 0.0;

    Eigen::Index size() const { return mean.size(); }
    Vector variance(bool include_noise) const {
        return include_noise ? Vector(latent_variance.array() + noise_variance) : latent_variance;
    }
    Vector stddev(bool include_noise = false) const { return variance(include_noise).cwiseSqrt(); }
};

/// Predictive mean and variance on the raw objective scale.
struct RawPredictive {
    Vector mean;
    Vector variance;
};

/// A GP conditioned on training data: hyperparameters, optional feature map,
/// the target standardizer and the cached Cholesky factor. Immutable after
/// construction; posterior queries are const and thread-safe.
class FittedSurrogate {
public:
    FittedSurrogate(GPHyperparams theta, std::optional<ProjectionMap> projection, Standardizer standardizer,
                    std::vector<std::string> train_ids, Matrix train_inputs, Vector train_targets,
                    int first_rung = 0)
        : theta_(theta),
          projection_(std::move(projection)),
          standardizer_(standardizer),
          train_ids_(std::move(train_ids)),
          train_inputs_(std::move(train_inputs)),
          train_targets_(std::move(train_targets)) {
        if (train_inputs_.rows() != train_targets_.size())
            throw DataError("surrogate: training inputs and targets differ in length");
        if (train_inputs_.rows() < 1) throw DataError("surrogate: needs at least one training point");
        features_ = projection_ ? project_forward(*projection_, train_inputs_) : train_inputs_;
        km_ = kernel_matrix(features_, theta_, first_rung);
        const Vector resid = train_targets_.array() - theta_.mean;
        alpha_ = km_.chol.solve(resid);
        mll_ = detail::mll_value(km_, resid, alpha_);
    }

    const GPHyperparams& theta() const { return theta_; }
    const std::optional<ProjectionMap>& projection() const { return projection_; }
    bool is_deep() const { return projection_.has_value(); }
    const Standardizer& standardizer() const { return standardizer_; }
    const std::vector<std::string>& train_ids() const { return train_ids_; }
    const Matrix& train_inputs() const { return train_inputs_; }
    const Vector& train_targets() const { return train_targets_; }
    const Matrix& train_features() const { return features_; }
    const KernelMatrix& kernel() const { return km_; }
    double mll() const { return mll_; }

    /// Maps raw embeddings to the space the kernel operates on (eval mode).
    Matrix features(const Matrix& X) const { return projection_ ? project_forward(*projection_, X) : X; }

    /// mean = c + k^T K^-1 (y - c), latent var = s2 - k^T K^-1 k, on the model scale.
    PosteriorGaussian posterior(const Matrix& Xq) const {
        const Matrix Zq = features(Xq);
        if (Zq.cols() != features_.cols()) throw DataError("posterior: query dimension mismatch");
        const double s2 = theta_.signal_variance();
        const Matrix Kqx = matern52_from_distances(cross_distances(features_, Zq), theta_.lengthscale(), s2);
        PosteriorGaussian post;
        post.mean = (Kqx.transpose() * alpha_).array() + theta_.mean;
        const Matrix V = km_.chol.matrixL().solve(Kqx);
        post.latent_variance = (s2 - V.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);
        post.noise_variance = theta_.noise_variance();
        return post;
    }

    RawPredictive predict_raw(const Matrix& Xq, bool include_noise) const {
        const PosteriorGaussian post = posterior(Xq);
        const double scale2 = standardizer_.y_std * standardizer_.y_std;
        return {standardizer_.inverse(post.mean), post.variance(include_noise) * scale2};
    }

    /// Hyperparameters, standardizer, training ids and (for deep surrogates) the
    /// projection weights. Training data itself is referenced by id.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = 1;
        j["kind"] = is_deep() ? "deep" : "fixed";
        j["hyperparameters"] = {{"lengthscale", theta_.lengthscale()},
                                {"signal_variance", theta_.signal_variance()},
                                {"noise_variance", theta_.noise_variance()},
                                {"mean", theta_.mean},
                                {"log_lengthscale", theta_.log_lengthscale},
                                {"log_signal_variance", theta_.log_signal_variance},
                                {"log_noise_variance", theta_.log_noise_variance}};
        j["standardizer"] = {{"y_mean", standardizer_.y_mean},
                             {"y_std", standardizer_.y_std},
                             {"degenerate", standardizer_.degenerate}};
        j["train_ids"] = train_ids_;
        j["mll"] = mll_;
        j["jitter"] = km_.jitter;
        if (projection_) {
            const auto& p = *projection_;
            std::vector<double> w(p.weight.data(), p.weight.data() + p.weight.size());
            std::vector<double> b(p.bias.data(), p.bias.data() + p.bias.size());
            j["projection"] = {{"out_dim", p.out_dim()},
                               {"in_dim", p.in_dim()},
                               {"dropout_rate", p.dropout_rate},
                               {"weight_colmajor", w},
                               {"bias", b}};
        }
        return j;
    }

private:
    GPHyperparams theta_;
    std::optional<ProjectionMap> projection_;
    Standardizer standardizer_;
    std::vector<std::string> train_ids_;
    Matrix train_inputs_;
    Vector train_targets_;
    Matrix features_;
    KernelMatrix km_;
    Vector alpha_;
    double mll_ = 0.0;
};

inline GPHyperparams hyperparams_from_json(const nlohmann::json& j) {
    try {
        const auto& h = j.at("hyperparameters");
        return {h.at("log_lengthscale").get<double>(), h.at("log_signal_variance").get<double>(),
                h.at("log_noise_variance").get<double>(), h.at("mean").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed surrogate hyperparameters: ") + e.what());
    }
}

/// Projection weights stored in a surrogate record, if any.
inline std::optional<ProjectionMap> projection_from_json(const nlohmann::json& j) {
    if (!j.contains("projection")) return std::nullopt;
    try {
        const auto& p = j.at("projection");
        const auto m = p.at("out_dim").get<Eigen::Index>();
        const auto d = p.at("in_dim").get<Eigen::Index>();
        auto w = p.at("weight_colmajor").get<std::vector<double>>();
        auto b = p.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(w.size()) != m * d || static_cast<Eigen::Index>(b.size()) != m)
            throw FormatError("projection weights have the wrong size");
        ProjectionMap pm;
        pm.weight = Eigen::Map<const Matrix>(w.data(), m, d);
        pm.bias = Eigen::Map<const Vector>(b.data(), m);
        pm.dropout_rate = p.at("dropout_rate").get<double>();
        return pm;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed projection record: ") + e.what());
    }
}

/// Restores a surrogate from its JSON form. Training rows are looked up in
/// `pool` by id; `raw_targets` are the observed objectives in the same order.
inline FittedSurrogate surrogate_from_json(const nlohmann::json& j, const CandidatePool& pool,
                                           const Vector& raw_targets) {
    try {
        const auto& s = j.at("standardizer");
        Standardizer st{s.at("y_mean").get<double>(), s.at("y_std").get<double>(), s.at("degenerate").get<bool>()};
        auto ids = j.at("train_ids").get<std::vector<std::string>>();
        if (static_cast<Eigen::Index>(ids.size()) != raw_targets.size())
            throw FormatError("surrogate record lists a different number of training ids than targets given");
        std::vector<std::size_t> idx;
        idx.reserve(ids.size());
        for (const auto& id : ids) idx.push_back(pool.index_of(id));
        return FittedSurrogate(hyperparams_from_json(j), projection_from_json(j), st, std::move(ids), pool.rows(idx),
                               st.transform(raw_targets));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed surrogate JSON: ") + e.what());
    }
}

/// Same, taking the targets from the pool's labels.
inline FittedSurrogate surrogate_from_json(const nlohmann::json& j, const CandidatePool& pool) {
    std::vector<std::size_t> idx;
    try {
        for (const auto& id : j.at("train_ids").get<std::vector<std::string>>()) idx.push_back(pool.index_of(id));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed surrogate JSON: ") + e.what());
    }
    return surrogate_from_json(j, pool, pool.labels_at(idx));
}

} // namespace dkbo
