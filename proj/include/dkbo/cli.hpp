#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dkbo/bo.hpp"
#include "dkbo/config.hpp"
#include "dkbo/diagnostics.hpp"
#include "dkbo/pool_io.hpp"
#include "dkbo/synthetic.hpp"

namespace dkbo::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kOutputSchemaVersion = 1;

struct Options {
    std::optional<fs::path> config;
    std::optional<fs::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<PoolFormat> format;
    std::optional<std::string> id;
    std::optional<std::string> y;
    std::optional<fs::path> spec;
};

namespace detail {

using dkbo::detail::format_double;
using dkbo::detail::read_file;
using dkbo::detail::write_file;

inline std::string num(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

/// Writes through a temporary file so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    write_file(tmp, bytes);
    fs::rename(tmp, path);
}

inline void append_lines(const fs::path& path, const std::vector<nlohmann::json>& events) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot open '" + path.string() + "' for appending");
    for (const auto& ev : events) out << ev.dump() << '\n';
    if (!out) throw IoError("append to '" + path.string() + "' failed");
}

inline std::string events_text(const std::vector<nlohmann::json>& events) {
    std::string s;
    for (const auto& ev : events) s += ev.dump() + "\n";
    return s;
}

inline std::vector<nlohmann::json> read_events(const fs::path& path) {
    std::vector<nlohmann::json> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline ExperimentConfig load_config(const Options& o) {
    if (!o.config) throw ConfigError("--config is required");
    ExperimentConfig c = load_experiment_config(*o.config);
    if (o.format) c.format = o.format;
    if (o.seed) c.seeds = {*o.seed};
    return c;
}

inline fs::path out_dir(const Options& o, const ExperimentConfig* c = nullptr) {
    if (o.out) return *o.out;
    if (c && c->output) return *c->output;
    throw ConfigError("--out is required");
}

inline std::string run_name(const std::string& method, std::uint64_t seed) {
    return method + "_seed" + std::to_string(seed);
}

inline nlohmann::json pool_source(const ExperimentConfig& c) {
    nlohmann::json j{{"minmax_scale", c.minmax}};
    if (c.synthetic) {
        j["synthetic"] = c.synthetic->to_json();
    } else {
        j["path"] = fs::absolute(*c.dataset).lexically_normal().string();
        if (c.format) j["format"] = to_string(*c.format);
    }
    return j;
}

inline CandidatePool load_pool_source(const nlohmann::json& j) {
    CandidatePool pool = j.contains("synthetic")
                             ? generate(SyntheticSpec::from_json(j.at("synthetic")))
                             : (j.contains("format") ? load_pool(j.at("path").get<std::string>(),
                                                                 parse_pool_format(j.at("format").get<std::string>()))
                                                     : load_pool(j.at("path").get<std::string>()));
    return j.value("minmax_scale", false) ? minmax_scale(pool) : pool;
}

struct RunResult {
    std::string method;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
};

inline const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols{"coverage", "coverage_pct", "best_y", "n_evaluated",
                                               "bo_iterations", "ended_early"};
    return cols;
}

/// One simulated BO run; everything it writes lives under `dir`.
inline void execute_run(const CandidatePool& pool, const ExperimentConfig& c, const std::string& method,
                        std::uint64_t seed, const fs::path& dir) {
    fs::create_directories(dir);
    fs::remove(dir / "error.json");
    const BOSession s = run_bo(pool, c.run_config(method, seed));
    write_atomic(dir / "events.jsonl", events_text(s.events));

    const auto trace = coverage_trace(s, pool, c.coverage_quantile);
    const auto best = s.best_trace();
    std::string tr = "step,id,y,best_y,coverage,phase\n";
    for (std::size_t i = 0; i < s.observed.size(); ++i) {
        const auto& o = s.observed[i];
        tr += std::to_string(i + 1) + "," + o.id + "," + num(o.y) + "," + num(best[i]) + "," + num(trace[i]) + "," +
              (o.initial ? "init" : "bo") + "\n";
    }
    write_atomic(dir / "trace.csv", tr);

    const double cov = topk_coverage(s, pool, c.coverage_quantile);
    std::string m = "method,seed";
    for (const auto& col : metric_columns()) m += "," + col;
    m += "\n" + method + "," + std::to_string(seed) + "," + num(cov) + "," + num(100.0 * cov) + "," +
         num(s.best_observed()) + "," + std::to_string(s.observed.size()) + "," + std::to_string(s.iteration) + "," +
         (s.ended_early ? "1" : "0") + "\n";
    write_atomic(dir / "metrics.csv", m);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    for (auto sv : dkbo::detail::split_commas(line)) out.emplace_back(sv);
    return out;
}

/// Aggregates per-run metrics listed in out/manifest.json into
/// out/aggregate.csv and out/report.json.
inline int write_report(const fs::path& out, std::ostream& os) {
    const nlohmann::json manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
    std::map<std::string, std::vector<std::map<std::string, double>>> per_method;
    std::vector<std::string> method_order;
    nlohmann::json runs = nlohmann::json::array();
    std::size_t failures = 0;
    for (const auto& r : manifest.at("runs")) {
        const std::string method = r.at("method").get<std::string>();
        const auto seed = r.at("seed").get<std::uint64_t>();
        const fs::path dir = out / "runs" / r.at("dir").get<std::string>();
        if (std::find(method_order.begin(), method_order.end(), method) == method_order.end())
            method_order.push_back(method);
        nlohmann::json rec{{"method", method}, {"seed", seed}, {"dir", r.at("dir")}};
        if (fs::exists(dir / "error.json") || !fs::exists(dir / "metrics.csv")) {
            ++failures;
            rec["status"] = "failed";
            rec["error"] = fs::exists(dir / "error.json")
                               ? nlohmann::json::parse(read_file(dir / "error.json")).value("error", "")
                               : "metrics missing";
            runs.push_back(rec);
            continue;
        }
        std::istringstream in(read_file(dir / "metrics.csv"));
        std::string header, row;
        std::getline(in, header);
        std::getline(in, row);
        const auto h = split_line(header), v = split_line(row);
        if (h.size() != v.size()) throw FormatError((dir / "metrics.csv").string() + ": malformed row");
        std::map<std::string, double> values;
        for (std::size_t k = 2; k < h.size(); ++k) {
            values[h[k]] = dkbo::detail::parse_double(v[k], 2, k + 1);
            rec[h[k]] = values[h[k]];
        }
        rec["status"] = "ok";
        per_method[method].push_back(values);
        runs.push_back(rec);
    }

    std::string csv = "method,metric,mean,std,n,single,display\n";
    nlohmann::json agg = nlohmann::json::object();
    for (const auto& method : method_order) {
        if (!per_method.count(method)) continue;
        const MetricReport rep = aggregate(per_method.at(method));
        for (const auto& col : metric_columns()) {
            const auto& m = rep.metrics.at(col);
            csv += method + "," + col + "," + num(m.mean) + "," + num(m.stddev) + "," + std::to_string(m.count) + "," +
                   (m.single ? "1" : "0") + "," + format_mean_std("", m) + "\n";
            agg[method][col] = {{"mean", m.mean}, {"std", m.stddev}, {"n", m.count}, {"single", m.single}};
        }
        os << format_mean_std(method + " top-" + format_double(100.0 * manifest.value("coverage_quantile", 0.05)) +
                                  "% coverage [%]",
                              rep.metrics.at("coverage_pct"))
           << "\n";
    }
    write_atomic(out / "aggregate.csv", csv);
    nlohmann::json report{{"schema", kOutputSchemaVersion},
                          {"coverage_quantile", manifest.value("coverage_quantile", 0.05)},
                          {"runs", runs},
                          {"aggregate", agg},
                          {"failures", failures}};
    write_atomic(out / "report.json", report.dump(2) + "\n");
    if (failures) os << failures << " run(s) failed\n";
    return failures ? kExitPartial : kExitOk;
}

struct SessionPaths {
    fs::path dir;
    fs::path meta() const { return dir / "session.json"; }
    fs::path events() const { return dir / "events.jsonl"; }
};

struct LoadedSession {
    CandidatePool pool;
    BOSession session;
};

inline LoadedSession load_session(const SessionPaths& p) {
    if (!fs::exists(p.meta()) || !fs::exists(p.events()))
        throw SessionError("no session in '" + p.dir.string() + "'");
    const auto meta = nlohmann::json::parse(read_file(p.meta()));
    if (meta.value("schema", 0) != kOutputSchemaVersion) throw SessionError("unsupported session schema");
    CandidatePool pool = load_pool_source(meta.at("dataset"));
    BOSession s = replay(read_events(p.events()), pool);
    return {std::move(pool), std::move(s)};
}

inline void print_suggestion(std::ostream& os, const std::string& id, double mean, double sd) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "\t%.6g\t%.6g", mean, sd);
    os << id << buf << "\n";
}

} // namespace detail

// ---------------------------------------------------------------------------

/// Sweeps every (method, seed) in the config. Exit 0 on success, 2 when some
/// runs failed (the rest are still aggregated), 1 on invalid input.
inline int cmd_run(const Options& o, std::ostream& os, std::ostream& es) {
    ExperimentConfig c;
    std::optional<CandidatePool> pool;
    fs::path out;
    try {
        c = detail::load_config(o);
        out = detail::out_dir(o, &c);
        pool.emplace(c.load_pool());
        if (!pool->labeled()) throw DataError("run simulates evaluations and needs a labeled pool");
        if (c.bo.init.rule == InitRule::lower_median) init_design(*pool, c.bo.init, 0);
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }

    struct Job {
        std::string method;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& m : c.methods)
        for (auto s : c.seeds) jobs.push_back({m, s});

    std::vector<detail::RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < jobs.size();) {
            const auto& j = jobs[k];
            auto& r = results[k];
            r.method = j.method;
            r.seed = j.seed;
            const fs::path dir = out / "runs" / detail::run_name(j.method, j.seed);
            try {
                detail::execute_run(*pool, c, j.method, j.seed, dir);
                r.ok = true;
            } catch (const std::exception& e) {
                r.error = e.what();
                try {
                    fs::create_directories(dir);
                    fs::remove(dir / "metrics.csv");
                    detail::write_atomic(dir / "error.json",
                                         nlohmann::json{{"method", j.method}, {"seed", j.seed}, {"error", r.error}}
                                                 .dump(2) +
                                             "\n");
                } catch (const std::exception&) {
                }
            }
        }
    };
    unsigned n_workers = o.workers.value_or(std::max(1u, std::thread::hardware_concurrency()));
    n_workers = std::max(1u, std::min<unsigned>(n_workers, static_cast<unsigned>(jobs.size())));
    try {
        fs::create_directories(out / "runs");
        std::vector<std::thread> pool_threads;
        for (unsigned w = 1; w < n_workers; ++w) pool_threads.emplace_back(worker);
        worker();
        for (auto& t : pool_threads) t.join();

        nlohmann::json manifest{{"schema", kOutputSchemaVersion},
                                {"coverage_quantile", c.coverage_quantile},
                                {"dataset", detail::pool_source(c)},
                                {"runs", nlohmann::json::array()}};
        for (const auto& r : results)
            manifest["runs"].push_back({{"method", r.method}, {"seed", r.seed}, {"dir", detail::run_name(r.method, r.seed)}});
        for (const auto& r : results)
            if (!r.ok) es << "run " << detail::run_name(r.method, r.seed) << " failed: " << r.error << "\n";
        detail::write_atomic(out / "manifest.json", manifest.dump(2) + "\n");
        return detail::write_report(out, os);
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

/// Rebuilds aggregate.csv and report.json from the per-run metrics of a previous run.
inline int cmd_report(const Options& o, std::ostream& os, std::ostream& es) {
    try {
        if (!o.out) throw ConfigError("--out is required");
        if (!fs::exists(*o.out / "manifest.json")) throw IoError("no run manifest in '" + o.out->string() + "'");
        return detail::write_report(*o.out, os);
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

/// Checks a config and its dataset without writing anything.
inline int cmd_validate(const Options& o, std::ostream& os, std::ostream& es) {
    try {
        const ExperimentConfig c = detail::load_config(o);
        const CandidatePool pool = c.load_pool();
        if (c.bo.init.rule == InitRule::lower_median) init_design(pool, c.bo.init, 0);
        os << "ok: n=" << pool.size() << " d=" << pool.dim() << " labeled=" << (pool.labeled() ? "yes" : "no")
           << " methods=" << c.methods.size() << " seeds=" << c.seeds.size() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

/// Prints the next candidate of the session in --out, creating the session
/// from --config if there is none. Repeating suggest before tell prints the
/// same candidate.
inline int cmd_suggest(const Options& o, std::ostream& os, std::ostream& es) {
    try {
        if (!o.out) throw ConfigError("--out is required");
        const detail::SessionPaths paths{*o.out};
        std::optional<detail::LoadedSession> ls;
        std::vector<nlohmann::json> fresh; // events to persist
        std::optional<nlohmann::json> meta;
        if (fs::exists(paths.events())) {
            ls.emplace(detail::load_session(paths));
        } else {
            const ExperimentConfig c = detail::load_config(o);
            CandidatePool pool = c.load_pool();
            BOSession s = start_session(pool, c.run_config(c.methods.front(), c.seeds.front()));
            fresh = s.events;
            meta = nlohmann::json{{"schema", kOutputSchemaVersion}, {"dataset", detail::pool_source(c)}};
            ls.emplace(detail::LoadedSession{std::move(pool), std::move(s)});
        }
        auto& s = ls->session;
        if (s.last_suggested) {
            for (auto it = s.events.rbegin(); it != s.events.rend(); ++it)
                if (it->value("event", "") == "select" && it->value("id", "") == *s.last_suggested) {
                    detail::print_suggestion(os, *s.last_suggested, it->value("mean", std::nan("")),
                                             it->value("std", std::nan("")));
                    break;
                }
            return kExitOk;
        }
        const Suggestion sg = suggest(s, ls->pool);
        fresh.insert(fresh.end(), sg.audit.begin(), sg.audit.end());
        if (meta) {
            fs::create_directories(paths.dir);
            detail::write_atomic(paths.meta(), meta->dump(2) + "\n");
        }
        detail::append_lines(paths.events(), fresh);
        detail::print_suggestion(os, sg.id, sg.mean, sg.stddev);
        return kExitOk;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

/// Records an observation (--id, --y) in the session in --out.
inline int cmd_tell(const Options& o, std::ostream& os, std::ostream& es) {
    try {
        if (!o.out) throw ConfigError("--out is required");
        if (!o.id || !o.y) throw ConfigError("--id and --y are required");
        double y = 0.0;
        try {
            y = dkbo::detail::parse_double(*o.y, 1, 1);
        } catch (const FormatError&) {
            throw DataError("--y: cannot parse '" + *o.y + "' as a number");
        }
        const detail::SessionPaths paths{*o.out};
        auto ls = detail::load_session(paths);
        const std::size_t before = ls.session.events.size();
        tell(ls.session, ls.pool, *o.id, y);
        detail::append_lines(paths.events(),
                             {ls.session.events.begin() + static_cast<std::ptrdiff_t>(before), ls.session.events.end()});
        os << "recorded " << *o.id << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

namespace detail {

struct DiagnoseRow {
    std::string surrogate;
    int repeat = 0;
    std::optional<double> r2, weighted_r2;
    double nlpd = 0.0;
    bool nlpd_floored = false;
    double smoothness = 0.0;
    double lengthscale = 0.0;
    std::optional<double> separation_init, separation;
};

} // namespace detail

/// Train/eval-split fit diagnostics: R^2, weighted R^2, NLPD and smoothness
/// ratio per repeat, plus class-pair distance histograms.
inline int cmd_diagnose(const Options& o, std::ostream& os, std::ostream& es) {
    ExperimentConfig c;
    std::optional<CandidatePool> pool;
    fs::path out;
    try {
        c = detail::load_config(o);
        out = detail::out_dir(o, &c) / "diagnose";
        pool.emplace(c.load_pool());
        if (!pool->labeled()) throw DataError("diagnose needs a labeled pool");
        if (pool->size() < c.diagnose.train_size + 2)
            throw DataError("pool of " + std::to_string(pool->size()) + " candidates is too small for a " +
                            std::to_string(c.diagnose.train_size) + "-point training split (need at least " +
                            std::to_string(c.diagnose.train_size + 2) + ")");
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }

    try {
        const auto& dg = c.diagnose;
        const std::uint64_t base = o.seed.value_or(c.seeds.front());
        const Matrix& PX = pool->X();
        const Vector& Py = pool->y();
        std::vector<detail::DiagnoseRow> rows;
        std::map<std::string, std::string> histograms;
        for (int r = 1; r <= dg.repeats; ++r) {
            const auto ru = static_cast<std::uint64_t>(r);
            Rng rng = make_rng({base, ru, stream::split});
            std::vector<std::size_t> idx(pool->size());
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            const std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(dg.train_size));
            const std::vector<std::size_t> ev(idx.begin() + static_cast<std::ptrdiff_t>(dg.train_size), idx.end());
            const Matrix Xtr = pool->rows(tr), Xev = pool->rows(ev);
            const Vector ytr = pool->labels_at(tr), yev = pool->labels_at(ev);
            for (const auto& kind : dg.surrogates) {
                detail::DiagnoseRow row;
                row.surrogate = kind;
                row.repeat = r;
                std::optional<FittedSurrogate> fit;
                std::optional<ProjectionMap> phi0;
                if (kind == "fixed") {
                    FixedFitOptions fo = c.bo.fixed;
                    fo.seed = derive_seed(base, ru, stream::fit);
                    fit.emplace(fit_fixed(Xtr, ytr, GPHyperparams::defaults(), fo));
                } else {
                    phi0 = init_projection(PX.cols(), c.bo.projection.width, derive_seed(base, ru, stream::projection),
                                           c.bo.projection.dropout);
                    TrainConfig tc = c.bo.train;
                    tc.seed = derive_seed(base, ru, stream::fit);
                    fit.emplace(joint_fit(Xtr, ytr, *phi0, GPHyperparams::defaults(), tc).surrogate);
                }
                const RawPredictive pred = fit->predict_raw(Xev, true);
                row.r2 = r2(yev, pred.mean);
                row.weighted_r2 = weighted_r2(yev, pred.mean, dg.top_quantile, dg.w_hi, dg.w_lo);
                const NlpdResult nl = nlpd(yev, pred);
                row.nlpd = nl.value;
                row.nlpd_floored = nl.floored;
                PairwiseOptions po;
                po.seed = derive_seed(base, ru, stream::pairs);
                row.smoothness = smoothness_ratio(*fit, PX, po);
                row.lengthscale = fit->theta().lengthscale();
                const ClassPairStats after = class_pair_distances(fit->features(PX), Py, dg.hi_q, dg.lo_q);
                row.separation = separation_score(after);
                if (phi0) {
                    const ClassPairStats before = class_pair_distances(project_forward(*phi0, PX), Py, dg.hi_q, dg.lo_q);
                    row.separation_init = separation_score(before);
                    if (r == 1) histograms[kind + "_init"] = class_pair_histogram_csv(before, dg.histogram_bins);
                }
                if (r == 1) histograms[kind] = class_pair_histogram_csv(after, dg.histogram_bins);
                rows.push_back(row);
            }
        }

        fs::create_directories(out);
        std::string csv =
            "surrogate,repeat,r2,weighted_r2,nlpd,nlpd_floored,smoothness_ratio,lengthscale,separation_init,separation\n";
        for (const auto& r : rows)
            csv += r.surrogate + "," + std::to_string(r.repeat) + "," + detail::num(r.r2) + "," +
                   detail::num(r.weighted_r2) + "," + detail::num(r.nlpd) + "," + (r.nlpd_floored ? "1" : "0") + "," +
                   detail::num(r.smoothness) + "," + detail::num(r.lengthscale) + "," +
                   detail::num(r.separation_init) + "," + detail::num(r.separation) + "\n";
        detail::write_atomic(out / "metrics.csv", csv);

        std::string summary = "surrogate,metric,mean,std,n,display\n";
        nlohmann::json js = nlohmann::json::object();
        for (const auto& kind : dg.surrogates) {
            std::map<std::string, std::vector<double>> cols;
            for (const auto& r : rows) {
                if (r.surrogate != kind) continue;
                if (r.r2) cols["r2"].push_back(*r.r2);
                if (r.weighted_r2) cols["weighted_r2"].push_back(*r.weighted_r2);
                cols["nlpd"].push_back(r.nlpd);
                if (std::isfinite(r.smoothness)) cols["smoothness_ratio"].push_back(r.smoothness);
                if (r.separation && std::isfinite(*r.separation)) cols["separation"].push_back(*r.separation);
            }
            for (const char* name : {"r2", "weighted_r2", "nlpd", "smoothness_ratio", "separation"}) {
                if (!cols.count(name)) {
                    summary += kind + "," + name + ",NA,NA,0,NA\n";
                    js[kind][name] = nullptr;
                    continue;
                }
                const MetricSummary m = summarize_metric(cols.at(name));
                summary += kind + "," + name + "," + detail::num(m.mean) + "," + detail::num(m.stddev) + "," +
                           std::to_string(m.count) + "," + format_mean_std("", m) + "\n";
                js[kind][name] = {{"mean", m.mean}, {"std", m.stddev}, {"n", m.count}};
                os << kind << " " << format_mean_std(name, m) << "\n";
            }
        }
        detail::write_atomic(out / "summary.csv", summary);
        for (const auto& [name, text] : histograms) detail::write_atomic(out / ("class_pairs_" + name + ".csv"), text);
        nlohmann::json report{{"schema", kOutputSchemaVersion},
                              {"train_size", dg.train_size},
                              {"eval_size", pool->size() - dg.train_size},
                              {"repeats", dg.repeats},
                              {"nlpd_scale", "raw objective, noise-inclusive variance"},
                              {"dataset", detail::pool_source(c)},
                              {"summary", js}};
        detail::write_atomic(out / "report.json", report.dump(2) + "\n");
        return kExitOk;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

/// Writes the synthetic pool described by the JSON file --spec to --out.
inline int cmd_generate(const Options& o, std::ostream& os, std::ostream& es) {
    try {
        if (!o.spec || !o.out) throw ConfigError("--spec and --out are required");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(dkbo::detail::read_file(*o.spec));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("spec: ") + e.what());
        }
        const CandidatePool pool = generate(SyntheticSpec::from_json(j));
        save_pool(pool, *o.out, o.format.value_or(format_from_path(*o.out)));
        os << "wrote " << pool.size() << " x " << pool.dim() << " pool to " << o.out->string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kExitError;
    }
}

} // namespace dkbo::cli
