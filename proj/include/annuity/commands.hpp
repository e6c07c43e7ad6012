#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "annuity/config.hpp"
#include "annuity/policy.hpp"

namespace annuity::cli {

// Process exit codes; a stable contract for scripts.
enum ExitCode : int { kOk = 0, kConfigError = 2, kNoConvergence = 3, kDomainError = 4 };

// Command-line overrides layered on top of the config file.
struct Options {
    std::optional<std::string> out;
    policy::Format format = policy::Format::Csv;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> policy_path;  // simulate: pre-solved policy instead of an inline solve
    bool benchmark = false;
    bool trace = false;  // simulate: per-path rows to <out>.trace.csv
};

// Each command writes human-readable results to `out` and returns an exit code.
// Errors propagate as exceptions; run() maps them to exit codes.
int cmd_npr_table(const RunConfig& cfg, const Options& opt, std::ostream& out);
int cmd_solve(const RunConfig& cfg, const Options& opt, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, const Options& opt, std::ostream& out);
int cmd_surface(const RunConfig& cfg, const Options& opt, std::ostream& out, std::ostream& err);

// Loads the config (defaults when `config_path` is empty), dispatches on `command` and
// converts library exceptions into exit codes with a message on `err`.
int run(const std::string& command, const std::string& config_path, const Options& opt, std::ostream& out,
        std::ostream& err);

}  // namespace annuity::cli
