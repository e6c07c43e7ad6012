#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "annuity/hjb.hpp"
#include "annuity/model.hpp"
#include "annuity/mortality.hpp"
#include "annuity/sim.hpp"

namespace annuity::cli {

enum class SimDiscount { Gompertz, Constant };

// Every key is optional; defaults are the baseline calibration.
struct RunConfig {
    model::ModelParams params;          // annuity_rate/effective_rate are resolved per age
    std::optional<double> annuity_rate; // annuity.rate; unset means the fair rate at the evaluation age
    mortality::Gompertz mortality;      // mortality.age is the evaluation age
    std::vector<double> npr_modal{60.0, 65.0, 70.0, 75.0, 80.0};
    double npr_objective_modal = 80.0;
    std::vector<double> surface_ages{60.0};
    hjb::Grid grid;
    hjb::SolverConfig solver;
    sim::SimConfig sim;
    std::optional<double> sim_y0_over_ystar;  // overrides sim.y0 once y* is known
    SimDiscount sim_discount = SimDiscount::Gompertz;
    long trace_paths = 10;
};

// Parses `section.key = value` lines; '#' starts a comment. Throws ConfigError naming the line
// for unknown or repeated keys and malformed values.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// All recognised keys with their default values, one `key = value` per line.
std::string default_config_text();
// Every key of `cfg` in the same layout; parse_config of the result reproduces `cfg`.
std::string config_text(const RunConfig& cfg);

// Gompertz law of the configured life re-anchored at `age`, discounted at prefs.beta.
mortality::DiscountSpec discount_at(const RunConfig& cfg, double age);
// Model parameters at `age`: eta from mortality, k explicit or fair. Throws ConfigError listing violations.
model::ModelParams params_at(const RunConfig& cfg, double age);
// Discount applied along simulated paths starting at `age`.
mortality::DiscountSpec sim_discount_at(const RunConfig& cfg, double age);

}  // namespace annuity::cli
