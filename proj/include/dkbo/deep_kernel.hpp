#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/gp.hpp"
#include "dkbo/projection.hpp"
#include "dkbo/random.hpp"
#include "dkbo/separation.hpp"
#include "dkbo/surrogate.hpp"

namespace dkbo {

/// Optimizer settings for joint training of GP hyperparameters and the projection.
struct TrainConfig {
    double lr_gp = 2e-1;
    double lr_feat = 2e-3;
    double weight_decay = 1e-3; // projection parameters only
    double clip_norm = 1.0;
    double lr_decay = 0.95;
    int decay_every = 10;
    int epochs = 100;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool standardize = true;
    std::vector<int> snapshot_epochs{};
    HyperparamBounds bounds{};

    void validate() const {
        if (!(lr_gp >= 0.0) || !(lr_feat >= 0.0) || !(weight_decay >= 0.0) || !(clip_norm > 0.0) ||
            !(lr_decay > 0.0) || decay_every < 1 || epochs < 0)
            throw ConfigError("invalid training configuration");
    }
};

/// Joint mll and its gradient over GP hyperparameters and projection weights.
struct JointGradient {
    double value = 0.0;
    Eigen::Vector4d theta = Eigen::Vector4d::Zero();
    ProjectionGrad phi;
    int jitter_rung = 0;
};

/// mll of the GP on g_phi(X); `mask` fixes the dropout pattern (nullptr = eval mode).
inline double joint_mll(const Matrix& X, const Vector& y, const GPHyperparams& theta, const ProjectionMap& phi,
                        const Matrix* mask = nullptr, int first_rung = 0) {
    const Matrix Z = project_forward(phi, X, mask);
    return mll_from_distances(pairwise_distances(Z), y, theta, first_rung);
}

inline JointGradient joint_mll_grad(const Matrix& X, const Vector& y, const GPHyperparams& theta,
                                    const ProjectionMap& phi, const Matrix* mask = nullptr, int first_rung = 0) {
    ProjectionCache cache;
    const Matrix Z = project_forward(phi, X, mask, &cache);
    MllGradient g = detail::mll_grad_from_distances(pairwise_distances(Z), y, theta, &Z, first_rung);
    JointGradient out;
    out.value = g.value;
    out.theta = g.theta;
    out.jitter_rung = g.jitter_rung;
    out.phi = project_backward(X, cache, g.features);
    return out;
}

struct TraceRecord {
    int epoch = 0;
    double mll_train = 0.0; // objective at the pre-update parameters (training mode)
    double mll_eval = 0.0;  // eval-mode mll after the update
    double best_mll = 0.0;
    double grad_norm = 0.0; // after clipping
    double grad_norm_raw = 0.0;
    double lr_gp = 0.0;
    double lr_feat = 0.0;
    bool skipped = false;
};

inline nlohmann::json to_json(const TraceRecord& r) {
    return {{"epoch", r.epoch},       {"mll_train", r.mll_train}, {"mll_eval", r.mll_eval},
            {"best_mll", r.best_mll}, {"grad_norm", r.grad_norm}, {"grad_norm_raw", r.grad_norm_raw},
            {"lr_gp", r.lr_gp},       {"lr_feat", r.lr_feat},     {"skipped", r.skipped}};
}

struct DeepFit {
    FittedSurrogate surrogate;
    std::vector<TraceRecord> trace;
    std::vector<std::pair<int, ProjectionMap>> snapshots;
    int best_epoch = 0;
    bool aborted = false;
};

namespace detail {

struct AdamState {
    Eigen::Vector4d m_theta = Eigen::Vector4d::Zero(), v_theta = Eigen::Vector4d::Zero();
    Matrix m_w, v_w;
    Vector m_b, v_b;
};

inline double eval_mll_or_neg_inf(const Matrix& X, const Vector& y, const GPHyperparams& theta,
                                  const ProjectionMap& phi, int rung) {
    try {
        const double v = joint_mll(X, y, theta, phi, nullptr, rung);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const SingularKernelError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

} // namespace detail

/// Full-batch joint maximization of the marginal likelihood over (theta, phi)
/// with decoupled-weight-decay Adam. GP hyperparameters and projection weights
/// form two groups with separate learning rates; weight decay applies to the
/// projection only. Gradients are clipped by global norm and both learning
/// rates decay geometrically every `decay_every` steps. Returns the iterate
/// with the best eval-mode mll seen over the trajectory.
inline DeepFit joint_fit(const Matrix& X, const Vector& y, const ProjectionMap& phi0,
                         const GPHyperparams& theta0 = GPHyperparams::defaults(), const TrainConfig& cfg = {},
                         std::vector<std::string> ids = {}) {
    cfg.validate();
    if (X.rows() < 2) throw DataError("joint_fit needs at least two observations");
    if (X.rows() != y.size()) throw DataError("joint_fit: inputs and targets differ in length");
    if (X.cols() != phi0.in_dim()) throw DataError("joint_fit: projection input dimension mismatch");
    if (!phi0.finite()) throw DataError("joint_fit: initial projection has non-finite parameters");

    Vector targets = y;
    Standardizer st = Standardizer::identity();
    if (cfg.standardize) std::tie(targets, st) = standardize_targets(y);
    if (ids.empty())
        for (Eigen::Index i = 0; i < X.rows(); ++i) ids.push_back(std::to_string(i));

    GPHyperparams theta = theta0;
    ProjectionMap phi = phi0;
    Rng rng = make_rng({cfg.seed, stream::dropout});

    int rung = 0;
    double best = detail::eval_mll_or_neg_inf(X, targets, theta, phi, rung);
    GPHyperparams best_theta = theta;
    ProjectionMap best_phi = phi;
    int best_epoch = 0;

    std::vector<TraceRecord> trace;
    std::vector<std::pair<int, ProjectionMap>> snapshots;
    auto wants_snapshot = [&](int epoch) {
        return std::find(cfg.snapshot_epochs.begin(), cfg.snapshot_epochs.end(), epoch) != cfg.snapshot_epochs.end();
    };
    trace.push_back({0, best, best, best, 0.0, 0.0, cfg.lr_gp, cfg.lr_feat, false});
    if (wants_snapshot(0)) snapshots.emplace_back(0, phi);

    detail::AdamState adam;
    adam.m_w = Matrix::Zero(phi.weight.rows(), phi.weight.cols());
    adam.v_w = adam.m_w;
    adam.m_b = Vector::Zero(phi.bias.size());
    adam.v_b = adam.m_b;

    double lr_gp = cfg.lr_gp;
    double lr_feat = cfg.lr_feat;
    int failures = 0;
    int adam_steps = 0;
    bool aborted = false;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        TraceRecord rec;
        rec.epoch = epoch;
        rec.lr_gp = lr_gp;
        rec.lr_feat = lr_feat;

        std::optional<Matrix> mask;
        if (phi.dropout_rate > 0.0) mask = sample_dropout_mask(X.rows(), phi.out_dim(), phi.dropout_rate, rng);

        JointGradient jg;
        bool ok = true;
        try {
            jg = joint_mll_grad(X, targets, theta, phi, mask ? &*mask : nullptr, rung);
            ok = std::isfinite(jg.value) && jg.theta.allFinite() && jg.phi.weight.allFinite() &&
                 jg.phi.bias.allFinite();
        } catch (const SingularKernelError&) {
            ok = false;
        }
        if (!ok) {
            rec.skipped = true;
            rec.mll_train = -std::numeric_limits<double>::infinity();
            rec.mll_eval = -std::numeric_limits<double>::infinity();
            rec.best_mll = best;
            trace.push_back(rec);
            rung = std::min(rung + 1, static_cast<int>(kJitterLadder.size()) - 1);
            if (++failures >= 5) {
                aborted = true;
                break;
            }
            continue;
        }
        failures = 0;
        rec.mll_train = jg.value;

        // Descend on -mll.
        Eigen::Vector4d g_theta = -jg.theta;
        Matrix g_w = -jg.phi.weight;
        Vector g_b = -jg.phi.bias;
        const double raw = std::sqrt(g_theta.squaredNorm() + g_w.squaredNorm() + g_b.squaredNorm());
        const double scale = raw > cfg.clip_norm ? cfg.clip_norm / raw : 1.0;
        g_theta *= scale;
        g_w *= scale;
        g_b *= scale;
        rec.grad_norm_raw = raw;
        rec.grad_norm = raw * scale;

        ++adam_steps;
        const double bc1 = 1.0 - std::pow(cfg.beta1, adam_steps);
        const double bc2 = 1.0 - std::pow(cfg.beta2, adam_steps);
        auto adam_update = [&](auto& param, auto& m, auto& v, const auto& grad, double lr) {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = (cfg.beta2 * v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
            param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
        };

        Eigen::Vector4d p = theta.packed();
        adam_update(p, adam.m_theta, adam.v_theta, g_theta, lr_gp);
        theta = GPHyperparams::from_packed(cfg.bounds.clamp(p));

        const double decay = 1.0 - lr_feat * cfg.weight_decay;
        phi.weight *= decay;
        phi.bias *= decay;
        adam_update(phi.weight, adam.m_w, adam.v_w, g_w, lr_feat);
        adam_update(phi.bias, adam.m_b, adam.v_b, g_b, lr_feat);

        if (epoch % cfg.decay_every == 0) {
            lr_gp *= cfg.lr_decay;
            lr_feat *= cfg.lr_decay;
        }

        rec.mll_eval = detail::eval_mll_or_neg_inf(X, targets, theta, phi, rung);
        if (rec.mll_eval > best) {
            best = rec.mll_eval;
            best_theta = theta;
            best_phi = phi;
            best_epoch = epoch;
        }
        rec.best_mll = best;
        trace.push_back(rec);
        if (wants_snapshot(epoch)) snapshots.emplace_back(epoch, phi);
    }

    if (!std::isfinite(best))
        throw SingularKernelError("joint_fit: no trained iterate admits a Cholesky factorization",
                                  std::numeric_limits<double>::infinity());
    FittedSurrogate sur(best_theta, best_phi, st, std::move(ids), X, std::move(targets), rung);
    return DeepFit{std::move(sur), std::move(trace), std::move(snapshots), best_epoch, aborted};
}

/// Separation statistics of the learned feature space at each snapshot epoch.
struct ContrastiveSnapshot {
    int epoch = 0;
    ClassPairStats stats;
    std::optional<double> score;
};

inline std::vector<ContrastiveSnapshot> contrastive_trace(const DeepFit& fit, const Matrix& X, const Vector& y,
                                                          double hi_q = 0.10, double lo_q = 0.10) {
    std::vector<ContrastiveSnapshot> out;
    out.reserve(fit.snapshots.size());
    for (const auto& [epoch, phi] : fit.snapshots) {
        ContrastiveSnapshot s;
        s.epoch = epoch;
        s.stats = class_pair_distances(project_forward(phi, X), y, hi_q, lo_q);
        s.score = separation_score(s.stats);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace dkbo
