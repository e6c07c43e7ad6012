// Acceptance checks, one PASS/FAIL line per criterion. With arguments, runs only the listed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "annuity/commands.hpp"
#include "annuity/hjb.hpp"
#include "annuity/mortality.hpp"
#include "annuity/numerics.hpp"
#include "annuity/policy.hpp"
#include "annuity/sim.hpp"

using namespace annuity;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... xs) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, xs...);
    return buf;
}

model::ModelParams defaults_at(double age) { return cli::params_at(cli::RunConfig{}, age); }

hjb::SolveResult solve_defaults(int n) {
    hjb::Grid g;
    g.n = n;
    return hjb::solve_vi(g, defaults_at(60.0), hjb::SolverConfig{});
}

double interpolate(const std::vector<double>& x, const std::vector<double>& f, double at) {
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return f.front();
    if (i == x.size()) return f.back();
    const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return f[i - 1] + w * (f[i] - f[i - 1]);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("annuity_acceptance_" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict npr_table() {
    const double expected[] = {0.3642, 0.4913, 0.6385, 0.8066, 1.0000};
    std::ostringstream out, err;
    const int code = cli::run("npr-table", "", {}, out, err);
    if (code != 0) return {false, "npr-table exit " + std::to_string(code) + ": " + err.str()};
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    bool pass = true;
    std::string detail;
    for (double e : expected) {
        if (!std::getline(in, line)) return {false, "missing rows"};
        const double got = std::stod(line.substr(line.find(',') + 1));
        pass = pass && std::fabs(got - e) <= 5e-4;
        detail += fmt("%s=%.4f(want %.4f) ", line.substr(0, line.find(',')).c_str(), got, e);
    }
    return {pass, detail};
}

Verdict constant_force_annuity() {
    const double k = mortality::fair_rate({0.03, mortality::ConstantForce{0.02}});
    return {std::fabs(k - 0.05) <= 1e-10, fmt("k=%.17g |err|=%.2e", k, std::fabs(k - 0.05))};
}

Verdict survival_identity() {
    const mortality::Gompertz g{60.0, 80.0, 10.0};
    numerics::QuadratureSpec q;
    q.rel_tol = 1e-14;
    q.abs_tol = 1e-15;
    double worst = 0.0, worst_mult = 0.0;
    for (double t : {1.0, 5.0, 10.0, 20.0, 40.0}) {
        const double hazard =
            numerics::integrate([&](double s) { return mortality::force_of_mortality(g, s); }, 0.0, t, q);
        worst = std::max(worst, std::fabs(std::exp(-hazard) - mortality::survival(g, t)));
        for (double s : {t, t + 1.0, t + 10.0, t + 25.0})
            worst_mult = std::max(worst_mult, std::fabs(mortality::survival(g, s) -
                                                        mortality::survival(g, t) * mortality::conditional_survival(g, t, s)));
    }
    return {worst <= 1e-10 && worst_mult <= 1e-10, fmt("quadrature err %.2e, multiplicativity err %.2e", worst, worst_mult)};
}

Verdict merton_limit() {
    model::ModelParams p = defaults_at(60.0);
    p.labor.wage = 0.0;
    p.labor.max_labor = 0.0;
    p.prefs.habit_speed = 1e-6;
    p.prefs.alpha = 1e-8;
    hjb::Grid g;
    g.y_min = 1e-6;
    g.y_max = 1e4;
    g.n = 2000;
    hjb::SolverConfig c;
    c.obstacle = hjb::ObstacleMode::Disabled;
    const auto t0 = std::chrono::steady_clock::now();
    const hjb::SolveResult r = hjb::solve_vi(g, p, c);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double gamma = p.prefs.gamma, theta = p.market.price_of_risk();
    const double nu = (p.effective_rate - (1.0 - gamma) * (p.market.r + theta * theta / (2.0 * gamma))) / gamma;
    const std::size_t n = r.y.size();
    // Interior band: the middle two-thirds of the nodes, away from the reflecting ends.
    double rel = 0.0, dp = 0.0, dp_all = 0.0;
    for (std::size_t i = n / 6; i <= 5 * n / 6; ++i) {
        const double v = std::pow(nu, -gamma) * std::pow(r.y[i], 1.0 - gamma) / (1.0 - gamma);
        rel = std::max(rel, std::fabs(r.value[i] / v - 1.0));
        dp = std::max(dp, std::fabs(r.portfolio[i] - model::merton_weight(p)));
    }
    for (std::size_t i = 1; i + 1 < n; ++i) dp_all = std::max(dp_all, std::fabs(r.portfolio[i] - model::merton_weight(p)));
    return {rel <= 5e-3 && dp <= 1e-2 && secs < 5.0,
            fmt("interior band: max rel V err %.2e (<=5e-3), max |p-0.625| %.2e (<=1e-2); "
                "all non-end nodes max |p-0.625| %.2e; %.2fs (<5s)",
                rel, dp, dp_all, secs)};
}

Verdict complementarity_structure() {
    const hjb::SolveResult r = solve_defaults(2000);
    const model::ModelParams p = defaults_at(60.0);
    double below = 0.0;
    bool kappa_ok = true, ordered = true;
    int stage = 0;
    std::map<hjb::Region, int> count;
    for (std::size_t i = 0; i < r.y.size(); ++i) {
        below = std::max(below, r.obstacle[i] - r.value[i]);
        const int s = static_cast<int>(r.region[i]);
        ordered = ordered && s >= stage;
        stage = s;
        ++count[r.region[i]];
        if (r.region[i] != hjb::Region::Stopped) kappa_ok = kappa_ok && r.kappa[i] >= p.prefs.alpha;
    }
    const bool all_regions = count[hjb::Region::Interior] > 0 && count[hjb::Region::Corner] > 0 &&
                             count[hjb::Region::Stopped] > 0;
    const double comp = r.diagnostics.max_complementarity;
    return {comp <= 1e-6 && below <= 0.0 && ordered && all_regions && kappa_ok,
            fmt("max|min(AV-u,V-G)| %.2e, max(G-V) %.2e, ordered=%d, nodes interior/corner/stopped=%d/%d/%d, "
                "kappa>=alpha=%d",
                comp, below, ordered, count[hjb::Region::Interior], count[hjb::Region::Corner],
                count[hjb::Region::Stopped], kappa_ok)};
}

Verdict free_boundary_convergence() {
    const int ns[] = {500, 1000, 2000};
    std::vector<double> sp, h;
    double vm = 0.0;
    const double tol = hjb::SolverConfig{}.tolerance;
    std::string detail;
    for (int n : ns) {
        const hjb::SolveResult r = solve_defaults(n);
        const auto& b = r.diagnostics.boundary;
        if (!b.smooth_pasting || !b.value_matching) return {false, "boundary residuals missing at N=" + std::to_string(n)};
        sp.push_back(*b.smooth_pasting);
        h.push_back(std::log(r.y[1] / r.y[0]));
        vm = std::max(vm, *b.value_matching);
        detail += fmt("N=%d sp=%.3e vm=%.1e; ", n, *b.smooth_pasting, *b.value_matching);
    }
    // Least-squares slope of log residual against log spacing.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        mx += std::log(h[i]) / 3;
        my += std::log(sp[i]) / 3;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        sxy += (std::log(h[i]) - mx) * (std::log(sp[i]) - my);
        sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
    }
    const double order = sxy / sxx;
    const bool monotone = sp[1] < sp[0] && sp[2] < sp[1];
    detail += fmt("fitted order %.2f (pairwise %.2f, %.2f)", order, std::log(sp[0] / sp[1]) / std::log(h[0] / h[1]),
                  std::log(sp[1] / sp[2]) / std::log(h[1] / h[2]));
    return {monotone && order >= 1.0 && vm <= tol, detail};
}

Verdict policy_shape() {
    const model::ModelParams p = defaults_at(60.0);
    const hjb::SolveResult r = solve_defaults(2000);
    const policy::PolicyTable t = policy::from_solution(r, p, 60.0);
    const std::size_t n = t.y.size();
    const double bbar = p.labor.max_labor;

    // Phases along y: 0 = interior/zero labor, 1 = plateau at bbar, 2 = zero after y*.
    bool pattern = t.y_tilde.has_value() && t.y_star.has_value();
    int phase = 0;
    bool plateau = false;
    for (std::size_t i = 0; i < n && pattern; ++i) {
        const int want = t.region[i] == hjb::Region::Stopped ? 2 : (t.labor[i] == bbar ? 1 : 0);
        pattern = want >= phase;
        plateau = plateau || want == 1;
        phase = want;
    }
    pattern = pattern && plateau && phase == 2;

    // One-sided slopes of p*y on each side of the first stopped node.
    std::size_t j = 0;
    while (j < n && t.region[j] != hjb::Region::Stopped) ++j;
    bool kink = false;
    double left = NAN, right = NAN;
    if (j >= 2 && j + 1 < n) {
        left = (t.portfolio[j - 1] * t.y[j - 1] - t.portfolio[j - 2] * t.y[j - 2]) / (t.y[j - 1] - t.y[j - 2]);
        right = (t.portfolio[j + 1] * t.y[j + 1] - t.portfolio[j] * t.y[j]) / (t.y[j + 1] - t.y[j]);
        kink = right < left;
    }

    bool exact = j < n;
    for (std::size_t i = j; i < n; ++i)
        exact = exact && t.kappa[i] == p.annuity_rate * t.y[i] && t.labor[i] == 0.0 &&
                        t.portfolio[i] == model::merton_weight(p) && std::fabs(t.portfolio[i] - 0.625) <= 1e-15;
    double bmax = 0.0;
    for (std::size_t i = 0; i < j; ++i) bmax = std::max(bmax, t.labor[i]);
    return {pattern && kink && exact,
            fmt("b* two-transition pattern=%d (y_tilde %s, max b* below y* %.4f vs bbar %.2f), "
                "p*y slope %.3g -> %.3g kink=%d, stopping branch exact=%d",
                pattern, t.y_tilde ? "found" : "absent", bmax, bbar, left, right, kink, exact)};
}

struct SimSetup {
    model::ModelParams params;
    hjb::SolveResult result;
    policy::PolicyTable table;
    mortality::DiscountSpec discount;
};

SimSetup sim_setup() {
    cli::RunConfig cfg;
    cfg.sim_discount = cli::SimDiscount::Constant;
    SimSetup s{defaults_at(60.0), solve_defaults(2000), {}, cli::sim_discount_at(cfg, 60.0)};
    s.table = policy::from_solution(s.result, s.params, 60.0);
    return s;
}

Verdict simulation_consistency() {
    const auto t0 = std::chrono::steady_clock::now();
    const SimSetup s = sim_setup();
    const double ys = *s.table.y_star;
    bool pass = true;
    std::string detail;
    for (double f : {0.5, 0.9}) {
        sim::SimConfig c;
        c.paths = 20000;
        c.dt = 1.0 / 250.0;
        c.y0 = f * ys;
        const sim::Estimate e = sim::estimate_objective(s.table, s.discount, c);
        const double v = interpolate(s.result.y, s.result.value, c.y0);
        const double tol = e.ci_half + 2.0 * c.dt * std::fabs(v);
        pass = pass && std::fabs(e.mean - v) <= tol;
        detail += fmt("y0=%.1fy*: sim %.4f +/- %.4f vs V %.4f, |diff| %.4f <= %.4f; ", f, e.mean, e.ci_half, v,
                      std::fabs(e.mean - v), tol);
    }
    for (double f : {1.0, 1.3}) {
        sim::SimConfig c;
        c.paths = 20000;
        c.y0 = f * ys;
        const sim::Estimate e = sim::estimate_objective(s.table, s.discount, c);
        const bool exact = e.mean == model::obstacle_G(c.y0, s.params) && e.ci_half == 0.0;
        pass = pass && exact;
        detail += fmt("y0=%.1fy* equals G exactly=%d; ", f, exact);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail += fmt("%.1fs (<30s)", secs);
    return {pass && secs < 30.0, detail};
}

Verdict benchmark_dominance() {
    const SimSetup s = sim_setup();
    const policy::PolicyTable bench = policy::benchmark_policy(s.table.y, s.table.y_star, s.params, 60.0);
    bool pass = true;
    std::string detail;
    for (double f : {0.5, 0.9}) {
        sim::SimConfig c;
        c.paths = 10000;
        c.y0 = f * *s.table.y_star;
        const sim::Comparison cmp = sim::compare(s.table, bench, s.discount, c);
        pass = pass && cmp.mean_diff - cmp.ci_half >= 0.0;
        detail += fmt("y0=%.1fy*: gap %.4f +/- %.4f (solved %.4f, benchmark %.4f); ", f, cmp.mean_diff, cmp.ci_half,
                      cmp.a.mean, cmp.b.mean);
    }
    return {pass, detail};
}

Verdict determinism() {
    const std::string conf = temp_path("det.conf");
    std::ofstream(conf) << "grid.n = 600\nsim.paths = 3000\nsim.horizon = 30\nsim.y0_over_ystar = 0.6\n"
                           "sim.trace_paths = 3\nsurface.ages = 60, 65, 70\n";
    auto run = [&](const std::string& cmd, const std::string& out, std::optional<int> threads, bool trace) {
        cli::Options o;
        o.out = out;
        o.threads = threads;
        o.trace = trace;
        std::ostringstream so, se;
        return cli::run(cmd, conf, o, so, se);
    };
    const std::vector<std::pair<std::string, std::vector<std::string>>> jobs{
        {"solve", {""}}, {"simulate", {"", ".trace.csv"}}, {"surface", {"", ".survival.csv"}}};
    bool pass = true;
    std::string detail;
    for (const auto& [cmd, suffixes] : jobs) {
        std::vector<std::string> outs;
        int idx = 0;
        for (std::optional<int> threads : {std::optional<int>{}, std::optional<int>{}, std::optional<int>{4}}) {
            const std::string out = temp_path(cmd + std::to_string(idx++) + ".csv");
            if (run(cmd, out, threads, cmd == "simulate") != 0) return {false, cmd + " failed"};
            std::string bytes;
            for (const auto& sfx : suffixes) bytes += slurp(out + sfx);
            outs.push_back(bytes);
        }
        const bool same = !outs[0].empty() && outs[0] == outs[1] && outs[0] == outs[2];
        pass = pass && same;
        detail += fmt("%s %zu bytes identical=%d; ", cmd.c_str(), outs[0].size(), same);
    }
    return {pass, detail + "(runs: twice single-threaded, once with 4 threads)"};
}

const std::vector<std::pair<const char*, std::function<Verdict()>>> kCriteria{
    {"NPR table", npr_table},
    {"constant-force annuity", constant_force_annuity},
    {"Gompertz survival identity", survival_identity},
    {"Merton limit", merton_limit},
    {"complementarity and structure", complementarity_structure},
    {"free-boundary convergence", free_boundary_convergence},
    {"policy shape", policy_shape},
    {"simulation vs solver", simulation_consistency},
    {"benchmark dominance", benchmark_dominance},
    {"determinism", determinism},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) which.push_back(i);
    int failures = 0;
    for (int id : which) {
        if (id < 1 || id > static_cast<int>(kCriteria.size())) {
            std::fprintf(stderr, "unknown criterion %d\n", id);
            return 2;
        }
        const auto& [name, check] = kCriteria[static_cast<std::size_t>(id - 1)];
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s) [%.2fs]: %s\n", v.pass ? "PASS" : "FAIL", id, name, secs, v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    }
    return failures == 0 ? 0 : 1;
}
