#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dkbo/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Deep-kernel Bayesian optimization over candidate pools"};
    app.require_subcommand(1);

    dkbo::cli::Options o;
    std::string config, out, format, spec;
    std::uint64_t seed = 0;
    unsigned workers = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "experiment config (.ini or .json)");
        sub->add_option("--out", out, "output or session directory");
        sub->add_option("--seed", seed, "restrict to a single seed");
        sub->add_option("--format", format, "pool format override (csv|binary)");
    };

    auto* run = app.add_subcommand("run", "sweep all methods and seeds of a config");
    add_common(run);
    run->add_option("--workers", workers, "concurrent runs (default: available cores)");
    auto* suggest = app.add_subcommand("suggest", "print the next candidate of an interactive session");
    add_common(suggest);
    auto* tell = app.add_subcommand("tell", "record an observation in an interactive session");
    add_common(tell);
    std::string id, y;
    tell->add_option("--id", id, "candidate id")->required();
    tell->add_option("--y", y, "observed objective value")->required();
    auto* diagnose = app.add_subcommand("diagnose", "train/eval-split fit and representation diagnostics");
    add_common(diagnose);
    auto* report = app.add_subcommand("report", "re-aggregate the per-run metrics of a sweep");
    add_common(report);
    auto* validate = app.add_subcommand("validate", "check a config and its dataset");
    add_common(validate);
    auto* gen = app.add_subcommand("generate", "write a synthetic benchmark pool");
    add_common(gen);
    gen->add_option("--spec", spec, "generator spec (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config.empty()) o.config = config;
        if (!out.empty()) o.out = out;
        if (!format.empty()) o.format = dkbo::parse_pool_format(format);
        if (!spec.empty()) o.spec = spec;
        if (!id.empty()) o.id = id;
        if (!y.empty()) o.y = y;
        for (auto* sub : app.get_subcommands()) {
            if (sub->count("--seed")) o.seed = seed;
            if (sub->get_name() == "run" && sub->count("--workers")) o.workers = workers;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dkbo::cli::kExitError;
    }

    namespace c = dkbo::cli;
    if (*run) return c::cmd_run(o, std::cout, std::cerr);
    if (*suggest) return c::cmd_suggest(o, std::cout, std::cerr);
    if (*tell) return c::cmd_tell(o, std::cout, std::cerr);
    if (*diagnose) return c::cmd_diagnose(o, std::cout, std::cerr);
    if (*report) return c::cmd_report(o, std::cout, std::cerr);
    if (*validate) return c::cmd_validate(o, std::cout, std::cerr);
    if (*gen) return c::cmd_generate(o, std::cout, std::cerr);
    return c::kExitError;
}
