#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "annuity/commands.hpp"
#include "annuity/error.hpp"

int main(int argc, char** argv) {
    using namespace annuity;
    CLI::App app{"Annuitization timing under habit formation and flexible labor"};
    app.fallthrough();
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string format = "csv";
    std::string out;
    std::string policy_path;
    std::uint64_t seed = 0;
    int threads = 0;
    bool benchmark = false;
    bool trace = false;
    app.add_option("--config", config_path, "Config file of `section.key = value` lines (defaults when omitted)");
    app.add_option("--out", out, "Output file");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    auto* seed_opt = app.add_option("--seed", seed, "Override sim.seed");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads (results do not depend on it)");
    auto* policy_opt = app.add_option("--policy", policy_path, "simulate: use this exported policy instead of solving");
    app.add_flag("--benchmark", benchmark, "simulate: paired comparison against the constant-Merton no-labor policy");
    app.add_flag("--trace", trace, "simulate: write per-path rows to <out>.trace.csv");

    app.add_subcommand("npr-table", "Normalized subjective annuity premium by modal age");
    app.add_subcommand("solve", "Solve the variational inequality at the configured age and export the policy");
    app.add_subcommand("simulate", "Monte Carlo estimate of the objective under a policy");
    app.add_subcommand("surface", "Policy slices over an age sweep in long format");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kConfigError;
    }

    cli::Options opt;
    if (!out.empty()) opt.out = out;
    opt.format = format == "json" ? policy::Format::Json : policy::Format::Csv;
    if (*seed_opt) opt.seed = seed;
    if (*threads_opt) opt.threads = threads;
    if (*policy_opt) opt.policy_path = policy_path;
    opt.benchmark = benchmark;
    opt.trace = trace;
    return cli::run(app.get_subcommands().front()->get_name(), config_path, opt, std::cout, std::cerr);
}
