#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/acquisition.hpp"
#include "dkbo/deep_kernel.hpp"
#include "dkbo/fit.hpp"
#include "dkbo/pool.hpp"

namespace dkbo {

inline constexpr int kEventSchemaVersion = 1;

enum class SurrogateKind { fixed, deep };
enum class AcquisitionKind { ei, random };
enum class InitRule { lower_median, uniform };

struct InitPolicy {
    int n_init = 10;
    InitRule rule = InitRule::lower_median;
};

struct ProjectionConfig {
    Eigen::Index width = kDefaultProjectionWidth;
    double dropout = 0.1;
    bool warm_start = false;
};

/// Everything that determines a BO trajectory besides the pool itself.
struct BoConfig {
    SurrogateKind surrogate = SurrogateKind::deep;
    AcquisitionKind acquisition = AcquisitionKind::ei;
    InitPolicy init{};
    int iterations = 50;
    std::uint64_t seed = 1;
    TrainConfig train{};
    ProjectionConfig projection{};
    FixedFitOptions fixed{};
    TieRule tie = TieRule::random;
};

/// "deep", "fixed" or "random": the method label used in reports.
inline std::string method_name(const BoConfig& c) {
    if (c.acquisition == AcquisitionKind::random) return "random";
    return c.surrogate == SurrogateKind::deep ? "deep" : "fixed";
}

inline nlohmann::json to_json(const BoConfig& c) {
    return {
        {"surrogate", c.surrogate == SurrogateKind::deep ? "deep" : "fixed"},
        {"acquisition", c.acquisition == AcquisitionKind::ei ? "ei" : "random"},
        {"n_init", c.init.n_init},
        {"init_rule", c.init.rule == InitRule::lower_median ? "lower_median" : "uniform"},
        {"iterations", c.iterations},
        {"seed", c.seed},
        {"tie_rule", c.tie == TieRule::random ? "random" : "first"},
        {"train",
         {{"lr_gp", c.train.lr_gp},
          {"lr_feat", c.train.lr_feat},
          {"weight_decay", c.train.weight_decay},
          {"clip_norm", c.train.clip_norm},
          {"lr_decay", c.train.lr_decay},
          {"decay_every", c.train.decay_every},
          {"epochs", c.train.epochs}}},
        {"projection",
         {{"width", c.projection.width}, {"dropout", c.projection.dropout}, {"warm_start", c.projection.warm_start}}},
        {"fixed", {{"restarts", c.fixed.restarts}, {"max_evals", c.fixed.max_evals}}},
    };
}

inline BoConfig bo_config_from_json(const nlohmann::json& j) {
    try {
        BoConfig c;
        c.surrogate = j.at("surrogate").get<std::string>() == "deep" ? SurrogateKind::deep : SurrogateKind::fixed;
        c.acquisition = j.at("acquisition").get<std::string>() == "ei" ? AcquisitionKind::ei : AcquisitionKind::random;
        c.init.n_init = j.at("n_init").get<int>();
        c.init.rule = j.at("init_rule").get<std::string>() == "lower_median" ? InitRule::lower_median : InitRule::uniform;
        c.iterations = j.at("iterations").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.tie = j.at("tie_rule").get<std::string>() == "random" ? TieRule::random : TieRule::first;
        const auto& t = j.at("train");
        c.train.lr_gp = t.at("lr_gp").get<double>();
        c.train.lr_feat = t.at("lr_feat").get<double>();
        c.train.weight_decay = t.at("weight_decay").get<double>();
        c.train.clip_norm = t.at("clip_norm").get<double>();
        c.train.lr_decay = t.at("lr_decay").get<double>();
        c.train.decay_every = t.at("decay_every").get<int>();
        c.train.epochs = t.at("epochs").get<int>();
        const auto& p = j.at("projection");
        c.projection.width = p.at("width").get<Eigen::Index>();
        c.projection.dropout = p.at("dropout").get<double>();
        c.projection.warm_start = p.at("warm_start").get<bool>();
        const auto& f = j.at("fixed");
        c.fixed.restarts = f.at("restarts").get<int>();
        c.fixed.max_evals = f.at("max_evals").get<int>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed session config: ") + e.what());
    }
}

struct Observation {
    std::string id;
    double y = 0.0;
    bool initial = false;
    bool out_of_band = false;
};

/// Resumable optimization state. `remaining` holds pool row indices in
/// ascending order; `events` is the append-only log the state can be rebuilt
/// from.
struct BOSession {
    BoConfig config{};
    std::string pool_digest;
    std::vector<std::string> initial_ids;
    std::vector<Observation> observed;
    std::vector<std::size_t> remaining;
    int iteration = 0;
    bool ended_early = false;
    std::optional<std::string> last_suggested;
    std::optional<nlohmann::json> warm_state; // last fitted surrogate when warm-starting
    std::vector<nlohmann::json> events;

    bool is_observed(const std::string& id) const {
        return std::any_of(observed.begin(), observed.end(), [&](const auto& o) { return o.id == id; });
    }

    std::optional<std::string> pending_initial() const {
        for (const auto& id : initial_ids)
            if (!is_observed(id)) return id;
        return std::nullopt;
    }

    double best_observed() const {
        double b = -std::numeric_limits<double>::infinity();
        for (const auto& o : observed) b = std::max(b, o.y);
        return b;
    }

    /// Best-so-far objective after each observation, in acquisition order.
    std::vector<double> best_trace() const {
        std::vector<double> out;
        double b = -std::numeric_limits<double>::infinity();
        for (const auto& o : observed) {
            b = std::max(b, o.y);
            out.push_back(b);
        }
        return out;
    }

    std::vector<std::string> observed_ids() const {
        std::vector<std::string> ids;
        ids.reserve(observed.size());
        for (const auto& o : observed) ids.push_back(o.id);
        return ids;
    }
};

/// FNV-1a over ids and float32 embedding bytes; identifies the pool a session belongs to.
inline std::string pool_digest(const CandidatePool& pool) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& id : pool.ids()) mix(id.data(), id.size() + 1);
    for (Eigen::Index i = 0; i < pool.X().rows(); ++i)
        for (Eigen::Index j = 0; j < pool.X().cols(); ++j) {
            const float f = static_cast<float>(pool.X()(i, j));
            mix(&f, sizeof f);
        }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string digest_scores(const std::vector<double>& scores) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (double s : scores) {
        unsigned char b[sizeof(double)];
        std::memcpy(b, &s, sizeof s);
        for (unsigned char c : b) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace dkbo
