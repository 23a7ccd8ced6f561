#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/kernel.hpp"
#include "dkbo/pool.hpp"
#include "dkbo/random.hpp"

namespace dkbo {

enum class Generator { gp_draw, planted_clusters, linear_subspace };

inline std::string to_string(Generator g) {
    switch (g) {
    case Generator::gp_draw: return "gp_draw";
    case Generator::planted_clusters: return "planted_clusters";
    case Generator::linear_subspace: return "linear_subspace";
    }
    return "?";
}

inline Generator parse_generator(const std::string& s) {
    if (s == "gp_draw") return Generator::gp_draw;
    if (s == "planted_clusters") return Generator::planted_clusters;
    if (s == "linear_subspace") return Generator::linear_subspace;
    throw ConfigError("unknown generator '" + s + "'");
}

/// Recipe for a synthetic labeled pool. Only the fields of the chosen
/// generator matter; all are recorded in the pool meta.
struct SyntheticSpec {
    Generator generator = Generator::planted_clusters;
    std::size_t n = 300;
    Eigen::Index d = 16;
    std::uint64_t seed = 1;

    // gp_draw: X ~ N(0, I), y ~ GP(0, Matern52(lengthscale, signal_variance)) + noise
    double lengthscale = 1.5;
    double signal_variance = 1.0;

    // planted_clusters: k Gaussian clusters with centers ~ N(0, center_scale^2 I)
    // and spread `spread`; cluster r (in a seeded random order) has mean
    // objective r * gap, plus a smooth within-cluster term trend * tanh(u . (x - c)).
    int k = 3;
    double gap = 1.0;
    double center_scale = 1.0;
    double spread = 1.0;
    double trend = 1.0;

    // linear_subspace: y = sum over `active_dims` seeded coordinates of sin(x_j) + noise
    int active_dims = 2;

    double noise = 0.05; // observation noise std (all generators)

    void validate() const {
        if (n < 2) throw ConfigError("synthetic pool needs n >= 2");
        if (d < 1) throw ConfigError("synthetic pool needs d >= 1");
        if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");
        switch (generator) {
        case Generator::gp_draw:
            if (!(lengthscale > 0.0) || !(signal_variance > 0.0))
                throw ConfigError("gp_draw needs positive lengthscale and signal variance");
            break;
        case Generator::planted_clusters:
            if (k < 1 || static_cast<std::size_t>(k) > n) throw ConfigError("planted_clusters needs 1 <= k <= n");
            if (!(gap >= 0.0) || !(center_scale >= 0.0) || !(spread >= 0.0))
                throw ConfigError("planted_clusters needs non-negative gap, center_scale and spread");
            break;
        case Generator::linear_subspace:
            if (active_dims < 1 || active_dims > d) throw ConfigError("linear_subspace needs 1 <= active_dims <= d");
            break;
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"generator", to_string(generator)}, {"n", n}, {"d", d}, {"seed", seed}, {"noise", noise}};
        switch (generator) {
        case Generator::gp_draw:
            j["lengthscale"] = lengthscale;
            j["signal_variance"] = signal_variance;
            break;
        case Generator::planted_clusters:
            j["k"] = k;
            j["gap"] = gap;
            j["center_scale"] = center_scale;
            j["spread"] = spread;
            j["trend"] = trend;
            break;
        case Generator::linear_subspace: j["active_dims"] = active_dims; break;
        }
        return j;
    }

    static SyntheticSpec from_json(const nlohmann::json& j) {
        static const std::vector<std::string> known{"generator", "n",      "d",      "seed",   "noise",
                                                    "lengthscale", "signal_variance", "k", "gap", "center_scale",
                                                    "spread", "trend", "active_dims"};
        if (!j.is_object()) throw ConfigError("synthetic spec must be a JSON object");
        for (const auto& [key, _] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end())
                throw ConfigError("unknown synthetic spec key '" + key + "'");
        SyntheticSpec s;
        try {
            s.generator = parse_generator(j.at("generator").get<std::string>());
            s.n = j.value("n", s.n);
            s.d = j.value("d", s.d);
            s.seed = j.value("seed", s.seed);
            s.noise = j.value("noise", s.noise);
            s.lengthscale = j.value("lengthscale", s.lengthscale);
            s.signal_variance = j.value("signal_variance", s.signal_variance);
            s.k = j.value("k", s.k);
            s.gap = j.value("gap", s.gap);
            s.center_scale = j.value("center_scale", s.center_scale);
            s.spread = j.value("spread", s.spread);
            s.trend = j.value("trend", s.trend);
            s.active_dims = j.value("active_dims", s.active_dims);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("malformed synthetic spec: ") + e.what());
        }
        s.validate();
        return s;
    }
};

namespace detail {

inline std::vector<std::string> synthetic_ids(std::size_t n) {
    std::vector<std::string> ids(n);
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "c%05zu", i);
        ids[i] = buf;
    }
    return ids;
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = N(rng);
    return M;
}

} // namespace detail

/// Builds the pool described by `spec`. Pure: the same spec always yields
/// the same pool.
inline CandidatePool generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng = make_rng({spec.seed, static_cast<std::uint64_t>(spec.generator), 0x5157});
    std::normal_distribution<double> N(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(spec.n);
    const Eigen::Index d = spec.d;
    Matrix X;
    Vector y(n);
    Meta meta{{"generator", to_string(spec.generator)}, {"spec", spec.to_json().dump()}};

    switch (spec.generator) {
    case Generator::gp_draw: {
        X = detail::gaussian_matrix(n, d, rng);
        Matrix K = matern52_from_distances(pairwise_distances(X), spec.lengthscale, spec.signal_variance);
        K.diagonal().array() += 1e-10 * spec.signal_variance;
        Eigen::LLT<Matrix> llt(K);
        if (llt.info() != Eigen::Success) throw DataError("gp_draw: kernel matrix not positive definite");
        Vector e(n);
        for (Eigen::Index i = 0; i < n; ++i) e(i) = N(rng);
        y = llt.matrixL() * e;
        for (Eigen::Index i = 0; i < n; ++i) y(i) += spec.noise * N(rng);
        break;
    }
    case Generator::planted_clusters: {
        const Matrix centers = spec.center_scale * detail::gaussian_matrix(spec.k, d, rng);
        Matrix dirs = detail::gaussian_matrix(spec.k, d, rng);
        for (int c = 0; c < spec.k; ++c) dirs.row(c).normalize();
        std::vector<int> level(static_cast<std::size_t>(spec.k));
        std::iota(level.begin(), level.end(), 0);
        std::shuffle(level.begin(), level.end(), rng);
        std::vector<int> assign(spec.n);
        for (std::size_t i = 0; i < spec.n; ++i) assign[i] = static_cast<int>(i % static_cast<std::size_t>(spec.k));
        std::shuffle(assign.begin(), assign.end(), rng);
        X.resize(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = assign[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < d; ++j) X(i, j) = centers(c, j) + spec.spread * N(rng);
            const double u = dirs.row(c).dot(X.row(i) - centers.row(c));
            y(i) = spec.gap * level[static_cast<std::size_t>(c)] + spec.trend * std::tanh(u) + spec.noise * N(rng);
        }
        std::string lv;
        for (int c = 0; c < spec.k; ++c) lv += (c ? "," : "") + std::to_string(level[static_cast<std::size_t>(c)]);
        meta["cluster_levels"] = lv;
        break;
    }
    case Generator::linear_subspace: {
        X = detail::gaussian_matrix(n, d, rng);
        std::vector<Eigen::Index> coords(static_cast<std::size_t>(d));
        std::iota(coords.begin(), coords.end(), 0);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(static_cast<std::size_t>(spec.active_dims));
        std::sort(coords.begin(), coords.end());
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = 0.0;
            for (auto j : coords) v += std::sin(X(i, j));
            y(i) = v + spec.noise * N(rng);
        }
        std::string cs;
        for (std::size_t c = 0; c < coords.size(); ++c) cs += (c ? "," : "") + std::to_string(coords[c]);
        meta["active_coords"] = cs;
        break;
    }
    }
    return CandidatePool(detail::synthetic_ids(spec.n), std::move(X), std::move(y), std::move(meta));
}

/// Same objective, transformed representation. Used to build families of
/// embeddings of one task for representation diagnostics.
inline CandidatePool rotate(const CandidatePool& pool, std::uint64_t seed) {
    Rng rng = make_rng({seed, 0x2071});
    const Matrix G = detail::gaussian_matrix(static_cast<Eigen::Index>(pool.dim()), static_cast<Eigen::Index>(pool.dim()), rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    const Matrix Q = qr.householderQ();
    return pool.with_embeddings(pool.X() * Q);
}

/// Mixes isotropic Gaussian noise of std `level` into every embedding.
inline CandidatePool corrupt(const CandidatePool& pool, double level, std::uint64_t seed) {
    Rng rng = make_rng({seed, 0xC022});
    return pool.with_embeddings(pool.X() + level * detail::gaussian_matrix(pool.X().rows(), pool.X().cols(), rng));
}

/// Appends `extra` pure-noise coordinates of std `level`.
inline CandidatePool pad_noise_dims(const CandidatePool& pool, Eigen::Index extra, double level, std::uint64_t seed) {
    Rng rng = make_rng({seed, 0xAD});
    Matrix X(pool.X().rows(), pool.X().cols() + extra);
    X << pool.X(), level * detail::gaussian_matrix(pool.X().rows(), extra, rng);
    return pool.with_embeddings(std::move(X));
}

/// Randomly permutes the labels across candidates (breaks all structure).
inline CandidatePool shuffle_labels(const CandidatePool& pool, std::uint64_t seed) {
    Rng rng = make_rng({seed, 0x5F});
    Vector y = pool.y();
    std::shuffle(y.data(), y.data() + y.size(), rng);
    return pool.with_labels(std::move(y));
}

} // namespace dkbo
