#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "dkbo/pool_io.hpp"
#include "dkbo/session.hpp"
#include "dkbo/synthetic.hpp"

namespace dkbo {

inline constexpr int kConfigSchemaVersion = 1;

/// Settings for the train/eval-split fit diagnostics.
struct DiagnoseConfig {
    std::size_t train_size = 60;
    int repeats = 20;
    std::vector<std::string> surrogates{"fixed", "deep"};
    double hi_q = 0.10;
    double lo_q = 0.10;
    double top_quantile = 0.05; // weighted R^2 upweights this share of eval points
    double w_hi = 3.0;
    double w_lo = 1.0;
    std::size_t histogram_bins = 30;
};

/// One experiment: where the pool comes from, which methods and seeds to
/// sweep, and the settings shared by every run.
struct ExperimentConfig {
    std::optional<std::filesystem::path> dataset;
    std::optional<PoolFormat> format; // empty = infer from extension
    bool minmax = false;
    std::optional<SyntheticSpec> synthetic;

    std::vector<std::string> methods{"deep", "fixed", "random"};
    std::vector<std::uint64_t> seeds;
    BoConfig bo{};
    double coverage_quantile = 0.05;
    DiagnoseConfig diagnose{};
    std::optional<std::filesystem::path> output;

    /// Run configuration for one method and seed.
    BoConfig run_config(const std::string& method, std::uint64_t seed) const {
        BoConfig c = bo;
        c.seed = seed;
        if (method == "deep") {
            c.surrogate = SurrogateKind::deep;
            c.acquisition = AcquisitionKind::ei;
        } else if (method == "fixed") {
            c.surrogate = SurrogateKind::fixed;
            c.acquisition = AcquisitionKind::ei;
        } else if (method == "random") {
            c.acquisition = AcquisitionKind::random;
        } else {
            throw ConfigError("unknown method '" + method + "'");
        }
        return c;
    }

    CandidatePool load_pool() const {
        CandidatePool pool = synthetic ? generate(*synthetic)
                                       : (format ? dkbo::load_pool(*dataset, *format) : dkbo::load_pool(*dataset));
        return minmax ? minmax_scale(pool) : pool;
    }
};

namespace detail {

using Sections = std::map<std::string, std::map<std::string, std::string>>;

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            const auto b = cur.find_first_not_of(" \t");
            const auto e = cur.find_last_not_of(" \t");
            if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("'" + key + "': cannot parse '" + v + "' as a number");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

/// "1-20", "3", "1,4,9-11".
inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split_list(s)) {
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            out.push_back(parse_number<std::uint64_t>("bo.seeds", part));
            continue;
        }
        const auto lo = parse_number<std::uint64_t>("bo.seeds", part.substr(0, dash));
        const auto hi = parse_number<std::uint64_t>("bo.seeds", part.substr(dash + 1));
        if (hi < lo) throw ConfigError("bo.seeds: empty range '" + part + "'");
        if (hi - lo > 100000) throw ConfigError("bo.seeds: range '" + part + "' is too large");
        for (auto k = lo; k <= hi; ++k) out.push_back(k);
    }
    if (out.empty()) throw ConfigError("bo.seeds is empty");
    std::set<std::uint64_t> uniq(out.begin(), out.end());
    if (uniq.size() != out.size()) throw ConfigError("bo.seeds lists a seed twice");
    return out;
}

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"dataset", {"path", "format", "minmax_scale"}},
        {"synthetic",
         {"generator", "n", "d", "seed", "noise", "lengthscale", "signal_variance", "k", "gap", "center_scale",
          "spread", "trend", "active_dims"}},
        {"bo", {"methods", "seeds", "iterations", "n_init", "init_rule", "tie_rule", "coverage_quantile"}},
        {"projection", {"width", "dropout", "warm_start"}},
        {"train", {"lr_gp", "lr_feat", "weight_decay", "clip_norm", "lr_decay", "decay_every", "epochs"}},
        {"fixed", {"restarts", "max_evals"}},
        {"diagnose",
         {"train_size", "repeats", "surrogates", "hi_q", "lo_q", "top_quantile", "w_hi", "w_lo", "histogram_bins"}},
        {"output", {"dir"}},
    };
    return keys;
}

inline Sections sections_from_ini(const std::string& text) {
    boost::property_tree::ptree pt;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }
    Sections out;
    for (const auto& [section, body] : pt) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside of any section");
        for (const auto& [key, value] : body) out[section][key] = value.get_value<std::string>();
    }
    return out;
}

inline Sections sections_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    Sections out;
    for (const auto& [section, body] : j.items()) {
        if (section == "schema") {
            if (body != kConfigSchemaVersion) throw ConfigError("config: unsupported schema version");
            continue;
        }
        if (!body.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
        for (const auto& [key, v] : body.items()) {
            std::string s;
            if (v.is_string())
                s = v.get<std::string>();
            else if (v.is_array()) {
                for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
            } else if (v.is_number() || v.is_boolean())
                s = v.dump();
            else
                throw ConfigError("config: unsupported value for '" + section + "." + key + "'");
            out[section][key] = s;
        }
    }
    return out;
}

} // namespace detail

/// Parses and validates an experiment config (INI with sections, or JSON with
/// the same shape). Unknown sections and keys are errors. Relative dataset
/// paths resolve against `base_dir`.
inline ExperimentConfig parse_experiment_config(const std::string& text, bool json,
                                                const std::filesystem::path& base_dir = {}) {
    const detail::Sections sec = json ? detail::sections_from_json(text) : detail::sections_from_ini(text);
    const auto& known = detail::known_keys();
    for (const auto& [section, body] : sec) {
        auto it = known.find(section);
        if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, _] : body)
            if (!it->second.count(key)) throw ConfigError("config: unknown key '" + section + "." + key + "'");
    }
    auto get = [&](const std::string& s, const std::string& k) -> std::optional<std::string> {
        auto it = sec.find(s);
        if (it == sec.end()) return std::nullopt;
        auto kt = it->second.find(k);
        if (kt == it->second.end()) return std::nullopt;
        return kt->second;
    };
    auto num = [&]<class T>(const std::string& s, const std::string& k, T& target) {
        if (auto v = get(s, k)) target = detail::parse_number<T>(s + "." + k, *v);
    };
    auto flag = [&](const std::string& s, const std::string& k, bool& target) {
        if (auto v = get(s, k)) target = detail::parse_bool(s + "." + k, *v);
    };

    ExperimentConfig c;
    if (auto p = get("dataset", "path")) {
        std::filesystem::path path(*p);
        c.dataset = path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    }
    if (auto f = get("dataset", "format"); f && *f != "auto") {
        try {
            c.format = parse_pool_format(*f);
        } catch (const Error& e) {
            throw ConfigError(std::string("dataset.format: ") + e.what());
        }
    }
    flag("dataset", "minmax_scale", c.minmax);

    if (sec.count("synthetic")) {
        nlohmann::json sj = nlohmann::json::object();
        for (const auto& [k, v] : sec.at("synthetic")) {
            if (k == "generator")
                sj[k] = v;
            else if (k == "n" || k == "d" || k == "seed" || k == "k" || k == "active_dims")
                sj[k] = detail::parse_number<std::int64_t>("synthetic." + k, v);
            else
                sj[k] = detail::parse_number<double>("synthetic." + k, v);
        }
        if (!sj.contains("generator")) throw ConfigError("config: synthetic.generator is required");
        c.synthetic = SyntheticSpec::from_json(sj);
    }
    if (c.dataset && c.synthetic) throw ConfigError("config: give either dataset.path or a [synthetic] section, not both");
    if (!c.dataset && !c.synthetic) throw ConfigError("config: dataset.path or a [synthetic] section is required");

    if (auto m = get("bo", "methods")) c.methods = detail::split_list(*m);
    if (c.methods.empty()) throw ConfigError("bo.methods is empty");
    for (const auto& m : c.methods)
        if (m != "deep" && m != "fixed" && m != "random") throw ConfigError("bo.methods: unknown method '" + m + "'");
    if (std::set<std::string>(c.methods.begin(), c.methods.end()).size() != c.methods.size())
        throw ConfigError("bo.methods lists a method twice");
    c.seeds = detail::parse_seed_list(get("bo", "seeds").value_or("1-20"));
    num("bo", "iterations", c.bo.iterations);
    num("bo", "n_init", c.bo.init.n_init);
    if (auto r = get("bo", "init_rule")) {
        if (*r == "lower_median")
            c.bo.init.rule = InitRule::lower_median;
        else if (*r == "uniform")
            c.bo.init.rule = InitRule::uniform;
        else
            throw ConfigError("bo.init_rule must be lower_median or uniform");
    }
    if (auto r = get("bo", "tie_rule")) {
        if (*r == "random")
            c.bo.tie = TieRule::random;
        else if (*r == "first")
            c.bo.tie = TieRule::first;
        else
            throw ConfigError("bo.tie_rule must be random or first");
    }
    num("bo", "coverage_quantile", c.coverage_quantile);
    if (c.bo.iterations < 1) throw ConfigError("bo.iterations must be at least 1");
    if (c.bo.init.n_init < 1) throw ConfigError("bo.n_init must be at least 1");
    if (!(c.coverage_quantile > 0.0 && c.coverage_quantile <= 1.0))
        throw ConfigError("bo.coverage_quantile must lie in (0, 1]");

    num("projection", "width", c.bo.projection.width);
    num("projection", "dropout", c.bo.projection.dropout);
    flag("projection", "warm_start", c.bo.projection.warm_start);
    if (c.bo.projection.width < 1) throw ConfigError("projection.width must be at least 1");
    if (!(c.bo.projection.dropout >= 0.0 && c.bo.projection.dropout < 1.0))
        throw ConfigError("projection.dropout must lie in [0, 1)");

    num("train", "lr_gp", c.bo.train.lr_gp);
    num("train", "lr_feat", c.bo.train.lr_feat);
    num("train", "weight_decay", c.bo.train.weight_decay);
    num("train", "clip_norm", c.bo.train.clip_norm);
    num("train", "lr_decay", c.bo.train.lr_decay);
    num("train", "decay_every", c.bo.train.decay_every);
    num("train", "epochs", c.bo.train.epochs);
    c.bo.train.validate();

    num("fixed", "restarts", c.bo.fixed.restarts);
    num("fixed", "max_evals", c.bo.fixed.max_evals);
    if (c.bo.fixed.restarts < 1 || c.bo.fixed.max_evals < 1)
        throw ConfigError("fixed.restarts and fixed.max_evals must be at least 1");

    auto& dg = c.diagnose;
    num("diagnose", "train_size", dg.train_size);
    num("diagnose", "repeats", dg.repeats);
    if (auto s = get("diagnose", "surrogates")) dg.surrogates = detail::split_list(*s);
    for (const auto& s : dg.surrogates)
        if (s != "deep" && s != "fixed") throw ConfigError("diagnose.surrogates: unknown surrogate '" + s + "'");
    if (dg.surrogates.empty()) throw ConfigError("diagnose.surrogates is empty");
    num("diagnose", "hi_q", dg.hi_q);
    num("diagnose", "lo_q", dg.lo_q);
    num("diagnose", "top_quantile", dg.top_quantile);
    num("diagnose", "w_hi", dg.w_hi);
    num("diagnose", "w_lo", dg.w_lo);
    num("diagnose", "histogram_bins", dg.histogram_bins);
    if (dg.train_size < 2) throw ConfigError("diagnose.train_size must be at least 2");
    if (dg.repeats < 1) throw ConfigError("diagnose.repeats must be at least 1");
    if (!(dg.hi_q > 0.0) || !(dg.lo_q > 0.0) || dg.hi_q + dg.lo_q > 1.0)
        throw ConfigError("diagnose.hi_q and diagnose.lo_q must be positive and sum to at most 1");
    if (!(dg.top_quantile > 0.0 && dg.top_quantile <= 1.0))
        throw ConfigError("diagnose.top_quantile must lie in (0, 1]");
    if (!(dg.w_hi > 0.0) || !(dg.w_lo > 0.0)) throw ConfigError("diagnose weights must be positive");
    if (dg.histogram_bins < 1) throw ConfigError("diagnose.histogram_bins must be at least 1");

    if (auto o = get("output", "dir")) c.output = std::filesystem::path(*o);
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_experiment_config(text, path.extension() == ".json", path.parent_path());
}

} // namespace dkbo
