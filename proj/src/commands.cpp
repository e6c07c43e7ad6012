#include "annuity/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "annuity/error.hpp"
#include "annuity/hjb.hpp"
#include "annuity/mortality.hpp"
#include "annuity/sim.hpp"
#include "annuity/text.hpp"

namespace annuity::cli {

namespace {

using json = nlohmann::ordered_json;
using text::format_double;

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

std::string fixed4(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    return f;
}

void finish(std::ofstream& f, const std::string& path) {
    f.flush();
    if (!f) throw IoError("write to '" + path + "' failed");
}

void print_boundary(std::ostream& out, const hjb::BoundaryDiagnostics& b) {
    out << "value_matching: " << optional_text(b.value_matching) << '\n'
        << "smooth_pasting: " << optional_text(b.smooth_pasting) << '\n'
        << "super_contact: " << optional_text(b.super_contact) << '\n'
        << "labor_jump_value: " << optional_text(b.labor_jump_value) << '\n'
        << "labor_jump_d1: " << optional_text(b.labor_jump_d1) << '\n'
        << "labor_jump_d2: " << optional_text(b.labor_jump_d2) << '\n';
}

struct Solved {
    model::ModelParams params;
    hjb::SolveResult result;
    policy::PolicyTable table;
};

Solved solve_at(const RunConfig& cfg, double age) {
    const model::ModelParams p = params_at(cfg, age);
    hjb::SolveResult r = hjb::solve_vi(cfg.grid, p, cfg.solver);
    policy::PolicyTable t = policy::from_solution(r, p, age);
    return {p, std::move(r), std::move(t)};
}

int threads_of(const RunConfig& cfg, const Options& opt) {
    const int n = opt.threads.value_or(cfg.sim.threads);
    if (n < 1) throw ConfigError("threads must be at least 1");
    return n;
}

// Statistic/value pairs in a fixed order; both the stdout summary and the file export use them.
std::vector<std::pair<std::string, std::string>> stats_rows(const sim::SimConfig& sc, const sim::PathStats& st) {
    std::vector<std::pair<std::string, std::string>> rows{
        {"seed", std::to_string(sc.seed)},
        {"paths", std::to_string(st.paths)},
        {"dt", format_double(sc.dt)},
        {"horizon", format_double(sc.horizon)},
        {"y0", format_double(sc.y0)},
        {"mean", format_double(st.mean)},
        {"ci_half", format_double(st.ci_half)},
    };
    for (std::size_t k = 0; k < sim::kQuantileLevels.size(); ++k) {
        const std::string name = "tau_q" + std::to_string(static_cast<int>(std::lround(100 * sim::kQuantileLevels[k])));
        rows.emplace_back(name, st.stopping_quantiles ? format_double((*st.stopping_quantiles)[k]) : "none");
    }
    rows.emplace_back("never_stopped", format_double(st.never_stopped));
    rows.emplace_back("ruined", format_double(st.ruined));
    rows.emplace_back("mean_wealth_at_stop", optional_text(st.mean_wealth_at_stop));
    rows.emplace_back("extrapolated_lookups", std::to_string(st.extrapolated_lookups));
    return rows;
}

void check_ages(const std::vector<double>& ages, const char* what, bool increasing) {
    if (ages.empty()) throw ConfigError(std::string(what) + ": list is empty");
    for (std::size_t i = 0; i < ages.size(); ++i) {
        if (!std::isfinite(ages[i]) || ages[i] < 0.0)
            throw ConfigError(std::string(what) + ": age " + format_double(ages[i]) + " is not a non-negative number");
        if (increasing && i > 0 && !(ages[i] > ages[i - 1]))
            throw ConfigError(std::string(what) + ": ages must be strictly increasing");
    }
}

void write_surface_rows(std::ostream& out, const policy::PolicyTable& t) {
    const std::string age = format_double(t.age);
    for (std::size_t i = 0; i < t.y.size(); ++i) {
        out << age << ',' << format_double(t.y[i]) << ',' << hjb::region_name(t.region[i]) << ','
            << format_double(t.kappa[i]) << ',' << format_double(t.labor[i]) << ',' << format_double(t.portfolio[i])
            << ',' << format_double(t.portfolio[i] * t.y[i]) << '\n';
    }
}

// Survival of the configured life under each subjective modal age, yearly up to 60 years.
void write_survival(std::ostream& out, const RunConfig& cfg) {
    out << "# age=" << format_double(cfg.mortality.age) << '\n' << "modal,t,survival\n";
    for (double m : cfg.npr_modal) {
        mortality::Gompertz g = cfg.mortality;
        g.modal = m;
        for (int t = 0; t <= 60; ++t)
            out << format_double(m) << ',' << t << ',' << format_double(mortality::survival(g, t)) << '\n';
    }
}

}  // namespace

int cmd_npr_table(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    check_ages(cfg.npr_modal, "npr.subjective_modal", false);
    check_ages({cfg.npr_objective_modal}, "npr.objective_modal", false);
    mortality::Gompertz objective = cfg.mortality;
    objective.modal = cfg.npr_objective_modal;
    std::vector<double> values;
    for (double m : cfg.npr_modal) {
        mortality::Gompertz subjective = cfg.mortality;
        subjective.modal = m;
        values.push_back(mortality::npr(subjective, objective, cfg.params.market.r));
    }
    out << "subjective_modal,npr\n";
    for (std::size_t i = 0; i < values.size(); ++i) out << format_double(cfg.npr_modal[i]) << ',' << fixed4(values[i]) << '\n';
    if (opt.out) {
        std::ofstream f = open_output(*opt.out);
        if (opt.format == policy::Format::Json) {
            json j;
            j["age"] = cfg.mortality.age;
            j["dispersion"] = cfg.mortality.dispersion;
            j["rate"] = cfg.params.market.r;
            j["objective_modal"] = cfg.npr_objective_modal;
            j["rows"] = json::array();
            for (std::size_t i = 0; i < values.size(); ++i)
                j["rows"].push_back({{"subjective_modal", cfg.npr_modal[i]}, {"npr", values[i]}});
            f << j.dump(2) << '\n';
        } else {
            f << "# age=" << format_double(cfg.mortality.age) << '\n'
              << "# dispersion=" << format_double(cfg.mortality.dispersion) << '\n'
              << "# rate=" << format_double(cfg.params.market.r) << '\n'
              << "# objective_modal=" << format_double(cfg.npr_objective_modal) << '\n'
              << "subjective_modal,npr\n";
            for (std::size_t i = 0; i < values.size(); ++i)
                f << format_double(cfg.npr_modal[i]) << ',' << format_double(values[i]) << '\n';
        }
        finish(f, *opt.out);
    }
    return kOk;
}

int cmd_solve(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    const double age = cfg.mortality.age;
    const Solved s = solve_at(cfg, age);
    const hjb::Diagnostics& d = s.result.diagnostics;
    out << "age: " << format_double(age) << '\n'
        << "eta: " << format_double(s.params.effective_rate) << '\n'
        << "k: " << format_double(s.params.annuity_rate) << '\n'
        << "nodes: " << s.result.y.size() << '\n'
        << "sweeps: " << d.sweeps << '\n'
        << "last_update: " << format_double(d.last_update) << '\n'
        << "max_complementarity: " << format_double(d.max_complementarity) << '\n'
        << "nonconcave_nodes: " << d.nonconcave_nodes << '\n'
        << "y_tilde: " << optional_text(s.result.y_tilde) << '\n';
    print_boundary(out, d.boundary);
    if (s.result.y_star) {
        out << "y_star: " << format_double(*s.result.y_star) << '\n';
        const policy::CrosscheckReport cc = policy::closed_form_crosschecks(s.table, s.params);
        out << "withdrawal_dev: " << optional_text(cc.withdrawal_dev) << '\n'
            << "interior_labor_rel_dev: " << optional_text(cc.interior_labor_rel_dev) << '\n';
    } else {
        out << "y_star: none\nno stopping region\n";
        // Distance of the interior portfolio from the constant Merton weight.
        const std::size_t n = s.table.y.size();
        double dev = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i)
            dev = std::max(dev, std::fabs(s.table.portfolio[i] - model::merton_weight(s.params)));
        out << "merton_portfolio_dev: " << format_double(dev) << '\n';
    }
    if (opt.out) {
        policy::export_table(s.table, *opt.out, opt.format);
        out << "policy: " << *opt.out << '\n';
    }
    return kOk;
}

int cmd_simulate(const RunConfig& cfg, const Options& opt, std::ostream& out) {
    if (opt.trace && !opt.out) throw ConfigError("--trace needs --out (rows go to <out>.trace.csv)");
    const policy::PolicyTable table =
        opt.policy_path ? policy::import_table(*opt.policy_path) : solve_at(cfg, cfg.mortality.age).table;

    sim::SimConfig sc = cfg.sim;
    if (opt.seed) sc.seed = *opt.seed;
    sc.threads = threads_of(cfg, opt);
    if (cfg.sim_y0_over_ystar) {
        if (!table.y_star) throw ConfigError("sim.y0_over_ystar is set but the policy has no stopping threshold");
        sc.y0 = *cfg.sim_y0_over_ystar * *table.y_star;
    }
    sc.validate();
    const mortality::DiscountSpec disc = sim_discount_at(cfg, table.age);

    std::ofstream trace_file;
    sim::TraceOptions trace;
    if (opt.trace) {
        const std::string path = *opt.out + ".trace.csv";
        trace_file = open_output(path);
        trace = {&trace_file, cfg.trace_paths};
    }
    const sim::PathStats st = sim::simulate(table, disc, sc, trace);
    if (opt.trace) finish(trace_file, *opt.out + ".trace.csv");

    auto rows = stats_rows(sc, st);
    if (opt.benchmark) {
        const policy::PolicyTable bench = policy::benchmark_policy(table.y, table.y_star, table.params, table.age);
        const sim::Comparison c = sim::compare(table, bench, disc, sc);
        rows.emplace_back("benchmark_mean", format_double(c.b.mean));
        rows.emplace_back("benchmark_ci_half", format_double(c.b.ci_half));
        rows.emplace_back("gap_mean", format_double(c.mean_diff));
        rows.emplace_back("gap_ci_half", format_double(c.ci_half));
        rows.emplace_back("gap_nonnegative_95", c.mean_diff + c.ci_half >= 0.0 ? "yes" : "no");
        if (opt.out) policy::export_table(bench, *opt.out + ".benchmark." + (opt.format == policy::Format::Json ? "json" : "csv"), opt.format);
    }
    for (const auto& [k, v] : rows) out << k << ": " << v << '\n';

    if (opt.out) {
        std::ofstream f = open_output(*opt.out);
        if (opt.format == policy::Format::Json) {
            json j;
            for (const auto& [k, v] : rows) j[k] = v;
            f << j.dump(2) << '\n';
        } else {
            f << "statistic,value\n";
            for (const auto& [k, v] : rows) f << k << ',' << v << '\n';
        }
        finish(f, *opt.out);
    }
    return kOk;
}

int cmd_surface(const RunConfig& cfg, const Options& opt, std::ostream& out, std::ostream& err) {
    check_ages(cfg.surface_ages, "surface.ages", true);
    const std::size_t n = cfg.surface_ages.size();
    // Validate every age before spending time on solves so config errors stay exit 2.
    for (double age : cfg.surface_ages) params_at(cfg, age);

    std::vector<std::optional<Solved>> solved(n);
    std::vector<std::string> failure(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                solved[i] = solve_at(cfg, cfg.surface_ages[i]);
            } catch (const std::exception& e) {
                failure[i] = e.what();
            }
        }
    };
    const int threads = std::min<int>(threads_of(cfg, opt), static_cast<int>(n));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ofstream file;
    if (opt.out) file = open_output(*opt.out);
    std::ostream& dest = opt.out ? static_cast<std::ostream&>(file) : out;
    if (opt.format == policy::Format::Json) {
        json j = json::array();
        for (const auto& s : solved)
            if (s) j.push_back(json::parse(policy::to_json(s->table)));
        dest << j.dump(2) << '\n';
    } else {
        for (const auto& s : solved) {
            if (!s) continue;
            dest << "# age=" << format_double(s->table.age) << " eta=" << format_double(s->params.effective_rate)
                 << " k=" << format_double(s->params.annuity_rate) << " y_star=" << optional_text(s->table.y_star)
                 << '\n';
        }
        dest << "age,y,region,kappa_star,b_star,p_star,pi_scaled\n";
        for (const auto& s : solved)
            if (s) write_surface_rows(dest, s->table);
    }
    if (opt.out) {
        finish(file, *opt.out);
        const std::string path = *opt.out + ".survival.csv";
        std::ofstream sf = open_output(path);
        write_survival(sf, cfg);
        finish(sf, path);
    }

    std::string failed;
    for (std::size_t i = 0; i < n; ++i) {
        if (failure[i].empty()) continue;
        err << "age " << format_double(cfg.surface_ages[i]) << " failed: " << failure[i] << '\n';
        failed += (failed.empty() ? "" : ",") + format_double(cfg.surface_ages[i]);
    }
    if (!failed.empty()) {
        err << "failed ages: " << failed << '\n';
        return kNoConvergence;
    }
    return kOk;
}

int run(const std::string& command, const std::string& config_path, const Options& opt, std::ostream& out,
        std::ostream& err) {
    try {
        const RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (command == "npr-table") return cmd_npr_table(cfg, opt, out);
        if (command == "solve") return cmd_solve(cfg, opt, out);
        if (command == "simulate") return cmd_simulate(cfg, opt, out);
        if (command == "surface") return cmd_surface(cfg, opt, out, err);
        throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kConfigError;
    } catch (const NoConvergence& e) {
        err << "no convergence: " << e.what() << " (last residual " << format_double(e.last_residual()) << ")\n";
        return kNoConvergence;
    } catch (const GridTooSmall& e) {
        err << "grid error: " << e.what() << '\n';
        return kDomainError;
    } catch (const DomainError& e) {
        err << "domain error: " << e.what() << '\n';
        return kDomainError;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNoConvergence;
    }
}

}  // namespace annuity::cli
