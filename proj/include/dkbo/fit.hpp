#pragma once

#include <cstdint>
#include <functional>
#include <tuple>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dkbo/gp.hpp"
#include "dkbo/random.hpp"
#include "dkbo/surrogate.hpp"

namespace dkbo {

struct FixedFitOptions {
    int restarts = 4;            // including the initial point
    int max_evals = 200;         // per restart
    double perturbation = 1.0;   // std of log-space restart perturbations
    bool standardize = true;
    std::uint64_t seed = 0;
    HyperparamBounds bounds{};
};

struct BfgsResult {
    Eigen::Vector4d x = Eigen::Vector4d::Zero();
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool ok = false;
};

/// Box-projected BFGS ascent with backtracking. Only strictly improving steps
/// are accepted, so the returned value is never below the starting value.
inline BfgsResult maximize_bfgs(const std::function<bool(const Eigen::Vector4d&, double&, Eigen::Vector4d&)>& eval,
                                const Eigen::Vector4d& x0, const HyperparamBounds& bounds, int max_evals) {
    BfgsResult res;
    Eigen::Vector4d x = x0, g;
    double f = 0.0;
    res.evaluations = 1;
    if (!eval(x, f, g)) return res;
    res.ok = true;

    auto projected_grad_norm = [&](const Eigen::Vector4d& at, const Eigen::Vector4d& grad) {
        double m = 0.0;
        for (int i = 0; i < 4; ++i) {
            const bool blocked = (at(i) <= bounds.lower(i) && grad(i) < 0.0) ||
                                 (at(i) >= bounds.upper(i) && grad(i) > 0.0);
            if (!blocked) m = std::max(m, std::abs(grad(i)));
        }
        return m;
    };

    Eigen::Matrix4d H = Eigen::Matrix4d::Identity();
    bool first = true;
    while (res.evaluations < max_evals && projected_grad_norm(x, g) > 1e-6) {
        Eigen::Vector4d dir = H * g;
        if (g.dot(dir) <= 0.0) {
            H.setIdentity();
            dir = g;
        }
        double t = first ? std::min(1.0, 1.0 / std::max(g.cwiseAbs().maxCoeff(), 1e-12)) : 1.0;
        bool accepted = false;
        Eigen::Vector4d xn, gn;
        double fn = 0.0;
        while (res.evaluations < max_evals && t > 1e-12) {
            xn = bounds.clamp(x + t * dir);
            ++res.evaluations;
            if (eval(xn, fn, gn) && fn > f && fn >= f + 1e-4 * std::max(0.0, g.dot(xn - x))) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (!H.isIdentity()) {
                H.setIdentity();
                continue;
            }
            break;
        }
        first = false;
        const Eigen::Vector4d s = xn - x;
        const Eigen::Vector4d yv = g - gn; // gradient change of the minimized objective -f
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
            H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
        }
        const double gain = fn - f;
        x = xn;
        f = fn;
        g = gn;
        if (gain < 1e-10 * (1.0 + std::abs(f))) break;
    }
    res.x = x;
    res.value = f;
    return res;
}

/// Type-II maximum likelihood for a fixed-feature GP: multi-restart BFGS in
/// the log parameterization, starting from theta0 plus log-space perturbations.
/// The best restart is kept; its mll is never below that of theta0.
inline FittedSurrogate fit_fixed(const Matrix& X, const Vector& y, const GPHyperparams& theta0 = GPHyperparams::defaults(),
                                 const FixedFitOptions& opts = {}, std::vector<std::string> ids = {}) {
    if (X.rows() < 2) throw DataError("fit_fixed needs at least two observations");
    if (X.rows() != y.size()) throw DataError("fit_fixed: inputs and targets differ in length");
    if (!X.allFinite()) throw DataError("fit_fixed: inputs contain non-finite values");
    Vector targets = y;
    Standardizer st = Standardizer::identity();
    if (opts.standardize) std::tie(targets, st) = standardize_targets(y);

    const Matrix D = pairwise_distances(X);
    auto eval = [&](const Eigen::Vector4d& p, double& f, Eigen::Vector4d& g) {
        try {
            auto r = detail::mll_grad_from_distances(D, targets, GPHyperparams::from_packed(p), nullptr);
            if (!std::isfinite(r.value) || !r.theta.allFinite()) return false;
            f = r.value;
            g = r.theta;
            return true;
        } catch (const SingularKernelError&) {
            return false;
        }
    };

    Rng rng = make_rng({opts.seed, stream::restarts});
    std::normal_distribution<double> normal(0.0, opts.perturbation);
    BfgsResult best;
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        Eigen::Vector4d start = theta0.packed();
        if (r > 0) {
            for (int k = 0; k < 3; ++k) start(k) += normal(rng);
            start = opts.bounds.clamp(start);
        }
        BfgsResult res = maximize_bfgs(eval, start, opts.bounds, opts.max_evals);
        if (res.ok && res.value > best.value) best = res;
    }
    if (!best.ok)
        throw SingularKernelError("fit_fixed: every restart failed to factorize the kernel matrix",
                                  std::numeric_limits<double>::infinity());
    if (ids.empty()) {
        ids.reserve(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) ids.push_back(std::to_string(i));
    }
    return FittedSurrogate(GPHyperparams::from_packed(best.x), std::nullopt, st, std::move(ids), X,
                           std::move(targets));
}

} // namespace dkbo
