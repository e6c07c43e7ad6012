#include "annuity/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "annuity/error.hpp"
#include "annuity/text.hpp"

namespace annuity::cli {

namespace {

using text::format_double;

struct Entry {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Access>
Entry number(std::string key, Access access) {
    return {key, [access, key](RunConfig& c, std::string_view v) { access(c) = text::parse_double(v, key); },
            [access](const RunConfig& c) { return format_double(access(c)); }};
}

template <class Access>
Entry integer(std::string key, Access access) {
    return {key,
            [access, key](RunConfig& c, std::string_view v) {
                using T = std::remove_reference_t<decltype(access(c))>;
                access(c) = static_cast<T>(text::parse_int(v, key));
            },
            [access](const RunConfig& c) { return std::to_string(access(c)); }};
}

template <class Access>
Entry list(std::string key, Access access) {
    return {key,
            [access, key](RunConfig& c, std::string_view v) {
                std::vector<double> out;
                for (std::size_t pos; (pos = v.find(',')) != std::string_view::npos; v.remove_prefix(pos + 1))
                    out.push_back(text::parse_double(v.substr(0, pos), key));
                out.push_back(text::parse_double(v, key));
                access(c) = std::move(out);
            },
            [access](const RunConfig& c) {
                std::string s;
                for (double x : access(c)) s += (s.empty() ? "" : ", ") + format_double(x);
                return s;
            }};
}

template <class E, class Access>
Entry choice(std::string key, std::vector<std::pair<std::string, E>> names, Access access) {
    return {key,
            [access, key, names](RunConfig& c, std::string_view v) {
                for (const auto& [name, e] : names)
                    if (v == name) {
                        access(c) = e;
                        return;
                    }
                std::string allowed;
                for (const auto& n : names) allowed += (allowed.empty() ? "" : "|") + n.first;
                throw ConfigError(key + ": expected " + allowed + ", got '" + std::string(v) + "'");
            },
            [access, names](const RunConfig& c) {
                for (const auto& [name, e] : names)
                    if (access(c) == e) return name;
                return std::string("?");
            }};
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> t;
        t.push_back(number("market.r", [](auto& c) -> auto& { return c.params.market.r; }));
        t.push_back(number("market.mu", [](auto& c) -> auto& { return c.params.market.mu; }));
        t.push_back(number("market.sigma", [](auto& c) -> auto& { return c.params.market.sigma; }));
        t.push_back(number("prefs.beta", [](auto& c) -> auto& { return c.params.prefs.beta; }));
        t.push_back(number("prefs.gamma", [](auto& c) -> auto& { return c.params.prefs.gamma; }));
        t.push_back(number("prefs.psi", [](auto& c) -> auto& { return c.params.prefs.psi; }));
        t.push_back(number("prefs.leisure", [](auto& c) -> auto& { return c.params.prefs.leisure; }));
        t.push_back(number("prefs.alpha", [](auto& c) -> auto& { return c.params.prefs.alpha; }));
        t.push_back(number("prefs.habit_speed", [](auto& c) -> auto& { return c.params.prefs.habit_speed; }));
        t.push_back(number("labor.wage", [](auto& c) -> auto& { return c.params.labor.wage; }));
        t.push_back(number("labor.max_labor", [](auto& c) -> auto& { return c.params.labor.max_labor; }));
        t.push_back({"annuity.rate",
                     [](RunConfig& c, std::string_view v) {
                         c.annuity_rate = text::trim(v) == "fair" ? std::nullopt
                                                                  : std::optional(text::parse_double(v, "annuity.rate"));
                     },
                     [](const RunConfig& c) { return c.annuity_rate ? format_double(*c.annuity_rate) : "fair"; }});
        t.push_back(number("mortality.age", [](auto& c) -> auto& { return c.mortality.age; }));
        t.push_back(number("mortality.modal", [](auto& c) -> auto& { return c.mortality.modal; }));
        t.push_back(number("mortality.dispersion", [](auto& c) -> auto& { return c.mortality.dispersion; }));
        t.push_back(list("npr.subjective_modal", [](auto& c) -> auto& { return c.npr_modal; }));
        t.push_back(number("npr.objective_modal", [](auto& c) -> auto& { return c.npr_objective_modal; }));
        t.push_back(list("surface.ages", [](auto& c) -> auto& { return c.surface_ages; }));
        t.push_back(number("grid.y_min", [](auto& c) -> auto& { return c.grid.y_min; }));
        t.push_back(number("grid.y_max", [](auto& c) -> auto& { return c.grid.y_max; }));
        t.push_back(integer("grid.n", [](auto& c) -> auto& { return c.grid.n; }));
        t.push_back(choice<hjb::Spacing>("grid.spacing", {{"log", hjb::Spacing::Log}, {"uniform", hjb::Spacing::Uniform}},
                                         [](auto& c) -> auto& { return c.grid.spacing; }));
        t.push_back(integer("solver.max_sweeps", [](auto& c) -> auto& { return c.solver.max_sweeps; }));
        t.push_back(number("solver.tolerance", [](auto& c) -> auto& { return c.solver.tolerance; }));
        t.push_back(choice<hjb::ObstacleMode>("solver.obstacle",
                                              {{"projection", hjb::ObstacleMode::Projection},
                                               {"penalty", hjb::ObstacleMode::Penalty},
                                               {"disabled", hjb::ObstacleMode::Disabled}},
                                              [](auto& c) -> auto& { return c.solver.obstacle; }));
        t.push_back(number("solver.penalty", [](auto& c) -> auto& { return c.solver.penalty; }));
        t.push_back(choice<hjb::Upwind>("solver.upwind",
                                        {{"hybrid", hjb::Upwind::Hybrid}, {"drift_sign", hjb::Upwind::DriftSign}},
                                        [](auto& c) -> auto& { return c.solver.upwind; }));
        t.push_back(number("solver.portfolio_cap", [](auto& c) -> auto& { return c.solver.portfolio_cap; }));
        t.push_back(integer("sim.paths", [](auto& c) -> auto& { return c.sim.paths; }));
        t.push_back(number("sim.dt", [](auto& c) -> auto& { return c.sim.dt; }));
        t.push_back(number("sim.horizon", [](auto& c) -> auto& { return c.sim.horizon; }));
        t.push_back({"sim.seed", [](RunConfig& c, std::string_view v) { c.sim.seed = text::parse_u64(v, "sim.seed"); },
                     [](const RunConfig& c) { return std::to_string(c.sim.seed); }});
        t.push_back(number("sim.y0", [](auto& c) -> auto& { return c.sim.y0; }));
        t.push_back({"sim.y0_over_ystar",
                     [](RunConfig& c, std::string_view v) {
                         c.sim_y0_over_ystar = text::trim(v) == "none"
                                                   ? std::nullopt
                                                   : std::optional(text::parse_double(v, "sim.y0_over_ystar"));
                     },
                     [](const RunConfig& c) { return c.sim_y0_over_ystar ? format_double(*c.sim_y0_over_ystar) : "none"; }});
        t.push_back(number("sim.z0", [](auto& c) -> auto& { return c.sim.z0; }));
        t.push_back(integer("sim.threads", [](auto& c) -> auto& { return c.sim.threads; }));
        t.push_back(choice<sim::Scheme>("sim.scheme", {{"split", sim::Scheme::Split}, {"euler", sim::Scheme::Euler}},
                                        [](auto& c) -> auto& { return c.sim.scheme; }));
        t.push_back(choice<SimDiscount>("sim.discount",
                                        {{"gompertz", SimDiscount::Gompertz}, {"constant", SimDiscount::Constant}},
                                        [](auto& c) -> auto& { return c.sim_discount; }));
        t.push_back(integer("sim.trace_paths", [](auto& c) -> auto& { return c.trace_paths; }));
        return t;
    }();
    return table;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::string raw;
    for (int line_no = 1; std::getline(in, raw); ++line_no) {
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'section.key = value'");
        const std::string key(text::trim(line.substr(0, eq)));
        const std::string_view value = text::trim(line.substr(eq + 1));
        const Entry* entry = nullptr;
        for (const Entry& e : entries())
            if (e.key == key) entry = &e;
        if (!entry) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "key '" + key + "' given twice");
        try {
            entry->set(cfg, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

std::string default_config_text() { return config_text(RunConfig{}); }

std::string config_text(const RunConfig& cfg) {
    std::ostringstream out;
    for (const Entry& e : entries()) out << e.key << " = " << e.get(cfg) << '\n';
    return out.str();
}

mortality::DiscountSpec discount_at(const RunConfig& cfg, double age) {
    mortality::Gompertz g = cfg.mortality;
    g.age = age;
    return {cfg.params.prefs.beta, g};
}

model::ModelParams params_at(const RunConfig& cfg, double age) {
    const mortality::DiscountSpec d = discount_at(cfg, age);
    mortality::validate(d.law);
    model::ModelParams p = cfg.params;
    p.effective_rate = mortality::effective_rate(d, 0.0);
    p.annuity_rate = cfg.annuity_rate ? *cfg.annuity_rate : mortality::fair_rate(d);
    if (const auto v = model::validate(p); !v.empty()) {
        std::string msg = "invalid parameters at age " + format_double(age) + ":";
        for (const auto& x : v) msg += "\n  " + x.name + ": " + x.detail;
        throw ConfigError(msg);
    }
    return p;
}

mortality::DiscountSpec sim_discount_at(const RunConfig& cfg, double age) {
    mortality::DiscountSpec d = discount_at(cfg, age);
    if (cfg.sim_discount == SimDiscount::Constant)
        d.law = mortality::ConstantForce{mortality::force_of_mortality(d.law, 0.0)};
    return d;
}

}  // namespace annuity::cli
