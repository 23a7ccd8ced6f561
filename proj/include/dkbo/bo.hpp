#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/session.hpp"

namespace dkbo {

/// Derives a 64-bit seed for one purpose at one iteration.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t iteration, std::uint64_t purpose) {
    Rng r = make_rng({seed, iteration, purpose});
    return r();
}

/// Initial design. lower_median draws uniformly without replacement from
/// {i : y_i <= median(y)} (ties at the median included); uniform draws from
/// the whole pool and works without labels.
inline std::vector<std::size_t> init_design(const CandidatePool& pool, const InitPolicy& policy, std::uint64_t seed) {
    if (policy.n_init < 1) throw ConfigError("n_init must be at least 1");
    const auto k = static_cast<std::size_t>(policy.n_init);
    std::vector<std::size_t> candidates;
    if (policy.rule == InitRule::lower_median) {
        if (!pool.labeled()) throw DataError("lower-median initialization needs a labeled pool");
        if (pool.size() < 2 * k)
            throw DataError("lower-median initialization needs at least 2*n_init = " + std::to_string(2 * k) +
                            " candidates, pool has " + std::to_string(pool.size()));
        std::vector<double> sorted(pool.y().data(), pool.y().data() + pool.size());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool.y()(static_cast<Eigen::Index>(i)) <= median) candidates.push_back(i);
        if (candidates.size() < k)
            throw DataError("only " + std::to_string(candidates.size()) + " candidates lie at or below the median");
    } else {
        if (pool.size() < k) throw DataError("pool smaller than n_init");
        candidates.resize(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) candidates[i] = i;
    }
    Rng rng = make_rng({seed, stream::init_design});
    // Partial Fisher-Yates: the first k slots become the sample.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(k);
    return candidates;
}

namespace detail {

inline nlohmann::json event(const std::string& kind) { return {{"v", kEventSchemaVersion}, {"event", kind}}; }

inline void apply_observation(BOSession& s, const CandidatePool& pool, const std::string& id, double y,
                              bool out_of_band) {
    const std::size_t idx = pool.index_of(id);
    auto it = std::lower_bound(s.remaining.begin(), s.remaining.end(), idx);
    if (it == s.remaining.end() || *it != idx) throw SessionError("candidate '" + id + "' was already observed");
    const bool initial = std::find(s.initial_ids.begin(), s.initial_ids.end(), id) != s.initial_ids.end();
    s.remaining.erase(it);
    s.observed.push_back({id, y, initial, out_of_band});
    if (!initial) ++s.iteration;
    s.last_suggested.reset();
}

inline BOSession blank_session(const CandidatePool& pool, const BoConfig& config,
                               std::vector<std::string> initial_ids) {
    BOSession s;
    s.config = config;
    s.pool_digest = pool_digest(pool);
    s.initial_ids = std::move(initial_ids);
    s.remaining.resize(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) s.remaining[i] = i;
    return s;
}

} // namespace detail

/// Creates a session: draws the initial design and, when the pool is labeled,
/// reveals the initial labels immediately. For unlabeled pools the initial
/// ids are handed out by suggest() until they have all been told.
inline BOSession start_session(const CandidatePool& pool, const BoConfig& config) {
    if (config.iterations < 0) throw ConfigError("iterations must be non-negative");
    const auto init_idx = init_design(pool, config.init, config.seed);
    std::vector<std::string> init_ids;
    for (auto i : init_idx) init_ids.push_back(pool.ids()[i]);
    BOSession s = detail::blank_session(pool, config, init_ids);

    auto ev = detail::event("init");
    ev["config"] = to_json(config);
    ev["pool"] = {{"n", pool.size()}, {"d", pool.dim()}, {"digest", s.pool_digest}};
    ev["initial_ids"] = init_ids;
    s.events.push_back(std::move(ev));

    if (pool.labeled()) {
        for (auto i : init_idx) {
            const double y = pool.y()(static_cast<Eigen::Index>(i));
            detail::apply_observation(s, pool, pool.ids()[i], y, false);
            auto ob = detail::event("observe");
            ob["id"] = pool.ids()[i];
            ob["y"] = y;
            ob["phase"] = "init";
            ob["iteration"] = s.iteration;
            ob["out_of_band"] = false;
            s.events.push_back(std::move(ob));
        }
    }
    return s;
}

/// Result of one acquisition step. Computing it never changes the session.
struct Suggestion {
    std::string id;
    std::size_t index = 0;
    double score = 0.0;
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
    bool initial = false;
    std::vector<nlohmann::json> audit; // fit / scores / select records
};

/// Fits the surrogate on the observations so far and returns the EI argmax
/// over the remaining pool (or a seeded uniform pick for random search).
/// Pure: equal sessions give equal suggestions.
inline Suggestion suggest(const BOSession& s, const CandidatePool& pool) {
    if (s.pool_digest != pool_digest(pool)) throw SessionError("session belongs to a different pool");
    if (s.remaining.empty()) throw ExhaustedError("candidate pool exhausted");
    Suggestion out;
    const auto t = static_cast<std::uint64_t>(s.iteration);
    const BoConfig& cfg = s.config;

    auto select_event = [&](const Suggestion& sg) {
        auto ev = detail::event("select");
        ev["iteration"] = s.iteration;
        ev["id"] = sg.id;
        ev["score"] = sg.score;
        if (std::isfinite(sg.mean)) ev["mean"] = sg.mean;
        if (std::isfinite(sg.stddev)) ev["std"] = sg.stddev;
        ev["initial"] = sg.initial;
        return ev;
    };

    if (auto pending = s.pending_initial()) {
        out.id = *pending;
        out.index = pool.index_of(*pending);
        out.initial = true;
        out.audit.push_back(select_event(out));
        return out;
    }

    Rng select_rng = make_rng({cfg.seed, t, stream::select});
    if (cfg.acquisition == AcquisitionKind::random || s.observed.size() < 2) {
        out.index = random_select(s.remaining, select_rng);
        out.id = pool.ids()[out.index];
        out.audit.push_back(select_event(out));
        return out;
    }

    std::vector<std::size_t> train_idx;
    Vector y(static_cast<Eigen::Index>(s.observed.size()));
    std::vector<std::string> train_ids;
    for (std::size_t i = 0; i < s.observed.size(); ++i) {
        train_idx.push_back(pool.index_of(s.observed[i].id));
        y(static_cast<Eigen::Index>(i)) = s.observed[i].y;
        train_ids.push_back(s.observed[i].id);
    }
    const Matrix X = pool.rows(train_idx);

    auto fit_ev = detail::event("fit");
    fit_ev["iteration"] = s.iteration;
    std::optional<FittedSurrogate> fit;
    if (cfg.surrogate == SurrogateKind::fixed) {
        FixedFitOptions opts = cfg.fixed;
        opts.seed = derive_seed(cfg.seed, t, stream::fit);
        fit.emplace(fit_fixed(X, y, GPHyperparams::defaults(), opts, train_ids));
        fit_ev["kind"] = "fixed";
    } else {
        TrainConfig tc = cfg.train;
        tc.seed = derive_seed(cfg.seed, t, stream::fit);
        GPHyperparams theta0 = GPHyperparams::defaults();
        ProjectionMap phi0;
        if (cfg.projection.warm_start && s.warm_state) {
            theta0 = hyperparams_from_json(*s.warm_state);
            auto prev = projection_from_json(*s.warm_state);
            if (!prev) throw SessionError("warm-start record lacks projection weights");
            phi0 = std::move(*prev);
        } else {
            phi0 = init_projection(static_cast<Eigen::Index>(pool.dim()), cfg.projection.width,
                                   derive_seed(cfg.seed, t, stream::projection), cfg.projection.dropout);
        }
        DeepFit df = joint_fit(X, y, phi0, theta0, tc, train_ids);
        fit_ev["kind"] = "deep";
        fit_ev["best_epoch"] = df.best_epoch;
        fit_ev["aborted"] = df.aborted;
        fit.emplace(std::move(df.surrogate));
        if (cfg.projection.warm_start) fit_ev["surrogate"] = fit->to_json();
    }
    fit_ev["mll"] = fit->mll();
    fit_ev["lengthscale"] = fit->theta().lengthscale();
    fit_ev["signal_variance"] = fit->theta().signal_variance();
    fit_ev["noise_variance"] = fit->theta().noise_variance();
    fit_ev["mean"] = fit->theta().mean;
    out.audit.push_back(std::move(fit_ev));

    std::vector<double> scores;
    const AcquisitionScore best = select_next(*fit, pool.X(), s.remaining, s.best_observed(), cfg.tie, select_rng, &scores);
    auto sc = detail::event("scores");
    sc["iteration"] = s.iteration;
    sc["count"] = scores.size();
    sc["max"] = best.score;
    sc["digest"] = digest_scores(scores);
    out.audit.push_back(std::move(sc));

    out.index = best.index;
    out.id = pool.ids()[best.index];
    out.score = best.score;
    out.mean = best.mean;
    out.stddev = best.stddev;
    out.audit.push_back(select_event(out));
    return out;
}

/// Appends the audit records of a suggestion and remembers its id so a
/// following tell() can tell in-band from out-of-band observations.
inline void record_suggestion(BOSession& s, const Suggestion& sg) {
    for (const auto& ev : sg.audit) {
        if (ev.value("event", "") == "fit" && ev.contains("surrogate")) s.warm_state = ev["surrogate"];
        s.events.push_back(ev);
    }
    s.last_suggested = sg.id;
}

/// Records an observation. Unknown or already-observed ids and non-finite y
/// are rejected without touching the session.
inline void tell(BOSession& s, const CandidatePool& pool, const std::string& id, double y) {
    if (!std::isfinite(y)) throw DataError("observation for '" + id + "' is not finite");
    if (!pool.find(id)) throw SessionError("unknown candidate id '" + id + "'");
    if (s.is_observed(id)) throw SessionError("candidate '" + id + "' was already observed");
    const bool out_of_band = !(s.last_suggested && *s.last_suggested == id);
    const bool initial = std::find(s.initial_ids.begin(), s.initial_ids.end(), id) != s.initial_ids.end();
    detail::apply_observation(s, pool, id, y, out_of_band);
    auto ev = detail::event("observe");
    ev["id"] = id;
    ev["y"] = y;
    ev["phase"] = initial ? "init" : "bo";
    ev["iteration"] = s.iteration;
    ev["out_of_band"] = out_of_band;
    s.events.push_back(std::move(ev));
}

/// Simulated optimization on a labeled pool: T rounds of fit, score, select,
/// reveal. Ends early (flagged) if the pool runs out.
inline BOSession run_bo(const CandidatePool& pool, const BoConfig& config) {
    if (!pool.labeled()) throw DataError("run_bo simulates evaluations and needs a labeled pool");
    if (config.iterations < 1) throw ConfigError("iterations must be at least 1");
    BOSession s = start_session(pool, config);
    for (int t = 0; t < config.iterations; ++t) {
        if (s.remaining.empty()) {
            s.ended_early = true;
            auto ev = detail::event("ended_early");
            ev["iteration"] = s.iteration;
            s.events.push_back(std::move(ev));
            break;
        }
        Suggestion sg = suggest(s, pool);
        record_suggestion(s, sg);
        tell(s, pool, sg.id, pool.y()(static_cast<Eigen::Index>(sg.index)));
    }
    return s;
}

/// Rebuilds a session from its event log.
inline BOSession replay(const std::vector<nlohmann::json>& events, const CandidatePool& pool) {
    if (events.empty() || events.front().value("event", "") != "init")
        throw SessionError("event log must start with an init record");
    const auto& init = events.front();
    if (init.value("v", 0) != kEventSchemaVersion) throw SessionError("unsupported event log schema version");
    BoConfig cfg = bo_config_from_json(init.at("config"));
    BOSession s = detail::blank_session(pool, cfg, init.at("initial_ids").get<std::vector<std::string>>());
    if (init.at("pool").at("digest").get<std::string>() != s.pool_digest)
        throw SessionError("event log was recorded against a different pool");
    for (std::size_t k = 1; k < events.size(); ++k) {
        const auto& ev = events[k];
        const std::string kind = ev.value("event", "");
        if (kind == "observe") {
            detail::apply_observation(s, pool, ev.at("id").get<std::string>(), ev.at("y").get<double>(),
                                      ev.value("out_of_band", false));
        } else if (kind == "select") {
            s.last_suggested = ev.at("id").get<std::string>();
        } else if (kind == "fit") {
            if (ev.contains("surrogate")) s.warm_state = ev["surrogate"];
        } else if (kind == "ended_early") {
            s.ended_early = true;
        }
    }
    s.events = events;
    return s;
}

} // namespace dkbo
