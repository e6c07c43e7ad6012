#include "annuity/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <thread>
#include <vector>

#include "annuity/error.hpp"
#include "annuity/kernels.hpp"
#include "annuity/text.hpp"

namespace annuity::sim {

namespace {

constexpr std::size_t kBlock = 512;
constexpr double kZ95 = 1.959963984540054;

enum class Status : unsigned char { Running, Stopped, Ruined };

struct Outcome {
    double value = 0.0;
    double tau = 0.0;
    double wealth = 0.0;
    Status status = Status::Running;
    long extrapolated = 0;
};

struct TraceRow {
    long path;
    double t, y, z, kappa, b, p;
    bool stopped;
};

struct Shared {
    const policy::PolicyTable& policy;
    const SimConfig& cfg;
    std::vector<double> disc;  // exp(-cumulative discount) at step j
    long steps;
    double ruin_value;  // subsistence value u(alpha, bbar)/eta
    double tail_rate;   // effective discount rate at the horizon
    double y_star;
    kernels::RatioCoefficients coef;
    // Set when the policy nodes are log-uniform: a bracketing guess costs one log instead of a search.
    bool log_uniform = false;
    double log_first = 0.0;
    double inv_log_step = 0.0;
    // Flow utility at the policy nodes; between nodes it is interpolated like the controls.
    std::vector<double> node_utility;

    std::size_t guess(double y) const {
        if (!log_uniform || !(y > 0.0)) return 0;
        const double k = std::floor((std::log(y) - log_first) * inv_log_step) + 1.0;
        return k < 1.0 ? 1 : static_cast<std::size_t>(std::min(k, static_cast<double>(policy.y.size() - 1)));
    }
};

bool detect_log_uniform(const std::vector<double>& y, double& first, double& inv_step) {
    const std::size_t n = y.size();
    first = std::log(y.front());
    const double step = (std::log(y.back()) - first) / static_cast<double>(n - 1);
    inv_step = 1.0 / step;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(std::log(y[i]) - (first + step * static_cast<double>(i))) > 1e-9 * step) return false;
    return true;
}



// Welford in path-index order: identical values give mean == value and zero spread exactly.
Estimate summarize(const std::vector<double>& xs) {
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (xs[i] - mean);
    }
    const double n = static_cast<double>(xs.size());
    const double half = xs.size() > 1 ? kZ95 * std::sqrt(m2 / (n - 1.0) / n) : 0.0;
    return {mean, half};
}

// Boost's engine and ziggurat normal have a fixed algorithm, so streams match across standard libraries.
using Engine = boost::random::mt19937_64;
using Normal = boost::random::normal_distribution<double>;

Engine path_engine(std::uint64_t seed, long path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(static_cast<std::uint64_t>(path) >> 32)};
    return Engine(seq);
}

// Runs paths [first, last) in lock-step so all live paths share the step's discount weight.
void run_block(const Shared& s, long first, long last, std::vector<Outcome>& out,
               std::vector<std::vector<TraceRow>>* trace, long trace_paths) {
    const auto& params = s.policy.params;
    const double dt = s.cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double rho = params.prefs.habit_speed;

    std::size_t n = static_cast<std::size_t>(last - first);
    std::vector<long> id(n);
    std::vector<double> y(n, s.cfg.y0), z(n, s.cfg.z0), val(n, 0.0);
    std::vector<double> p(n), kap(n), lab(n), u(n), drift(n), vol(n), noise(n);
    std::vector<Engine> eng;
    Normal normal;  // stateless ziggurat
    eng.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        id[i] = first + static_cast<long>(i);
        eng.push_back(path_engine(s.cfg.seed, id[i]));
    }
    std::vector<std::size_t> cursor(n, 0);
    std::vector<std::size_t> slot(n);  // position of each live path in the RNG arrays
    for (std::size_t i = 0; i < n; ++i) slot[i] = i;

    auto record = [&](std::size_t i, double t, const policy::Controls& c, bool stopped) {
        if (trace && id[i] < trace_paths)
            (*trace)[static_cast<std::size_t>(id[i])].push_back({id[i], t, y[i], z[i], c.kappa, c.labor, c.portfolio, stopped});
    };

    for (long j = 0; n > 0; ++j) {
        const double t = static_cast<double>(j) * dt;
        const double disc = s.disc[static_cast<std::size_t>(j)];
        std::size_t live = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Outcome& o = out[static_cast<std::size_t>(id[i])];
            bool done = true;
            if (y[i] >= s.y_star) {
                const policy::Controls c = policy::evaluate(s.policy, y[i]);
                o.status = Status::Stopped;
                o.value = val[i] + disc * model::obstacle_G(y[i], params);
                o.tau = t;
                o.wealth = y[i] * z[i];
                record(i, t, c, true);
            } else if (!(y[i] > 0.0)) {
                o.status = Status::Ruined;
                o.value = val[i] + disc * s.ruin_value;
                o.tau = t;
            } else {
                done = false;
            }
            if (done) continue;
            if (s.log_uniform) cursor[i] = s.guess(y[i]);
            const policy::Location l = policy::locate(s.policy, y[i], cursor[i]);
            auto at = [&l](const std::vector<double>& v) { return v[l.lo] + l.w * (v[l.hi] - v[l.lo]); };
            if (j >= s.steps) {
                // Close the path with the perpetuity of its current flow utility.
                o.value = val[i] + disc * at(s.node_utility) / s.tail_rate;
                o.tau = t;
                continue;
            }
            const policy::Controls c{at(s.policy.kappa), at(s.policy.labor), at(s.policy.portfolio), false, l.extrapolated};
            if (c.extrapolated) ++o.extrapolated;
            record(i, t, c, false);
            id[live] = id[i];
            y[live] = y[i];
            z[live] = z[i];
            val[live] = val[i];
            slot[live] = slot[i];
            cursor[live] = cursor[i];
            p[live] = c.portfolio;
            kap[live] = c.kappa;
            lab[live] = c.labor;
            u[live] = at(s.node_utility);
            ++live;
        }
        n = live;
        if (n == 0) break;
        kernels::accumulate(val.data(), u.data(), disc * dt, n);
        for (std::size_t i = 0; i < n; ++i) {
            noise[i] = normal(eng[slot[i]]);
            z[i] *= 1.0 + rho * (kap[i] - 1.0) * dt;
        }
        if (s.cfg.scheme == Scheme::Euler) {
            kernels::ratio_dynamics(s.coef, y.data(), p.data(), kap.data(), lab.data(), drift.data(), vol.data(), n);
            kernels::euler_update(y.data(), drift.data(), vol.data(), noise.data(), dt, sqrt_dt, n);
        } else {
            // drift/vol double as exponent/shift buffers here
            kernels::split_step(s.coef, p.data(), kap.data(), lab.data(), noise.data(), dt, sqrt_dt, drift.data(),
                                vol.data(), n);
            for (std::size_t i = 0; i < n; ++i) y[i] = y[i] * std::exp(drift[i]) + vol[i];
        }
    }
}

std::vector<Outcome> run(const policy::PolicyTable& policy, const mortality::DiscountSpec& discount,
                         const SimConfig& cfg, const TraceOptions& trace_opt) {
    cfg.validate();
    policy.validate();
    const auto& params = policy.params;
    Shared s{.policy = policy,
             .cfg = cfg,
             .disc = {},
             .steps = static_cast<long>(std::ceil(cfg.horizon / cfg.dt - 1e-9)),
             .ruin_value = model::utility(params.prefs.alpha, params.labor.max_labor, params.prefs) / params.effective_rate,
             .tail_rate = mortality::effective_rate(discount, cfg.horizon),
             .y_star = policy.y_star.value_or(HUGE_VAL),  // no threshold: the path never stops
             .coef = {params.market.r + params.prefs.habit_speed, params.market.mu - params.market.r,
                      params.prefs.habit_speed, params.labor.wage, params.market.sigma},
             .node_utility = {}};
    s.node_utility.resize(policy.y.size());
    for (std::size_t i = 0; i < policy.y.size(); ++i)
        s.node_utility[i] = model::utility(policy.kappa[i], policy.labor[i], params.prefs);
    s.log_uniform = detect_log_uniform(policy.y, s.log_first, s.inv_log_step);
    s.disc.resize(static_cast<std::size_t>(s.steps) + 1);
    for (long j = 0; j <= s.steps; ++j)
        s.disc[static_cast<std::size_t>(j)] = std::exp(-mortality::cumulative_discount(discount, static_cast<double>(j) * cfg.dt));

    std::vector<Outcome> out(static_cast<std::size_t>(cfg.paths));
    const long trace_paths = trace_opt.out ? std::min(trace_opt.paths, cfg.paths) : 0;
    std::vector<std::vector<TraceRow>> rows(static_cast<std::size_t>(trace_paths));
    auto* trace = trace_paths > 0 ? &rows : nullptr;

    // Contiguous path ranges per thread; each path's result depends only on (seed, index).
    const long nthreads = std::max<long>(1, std::min<long>(cfg.threads, (cfg.paths + kBlock - 1) / kBlock));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(nthreads));
    auto worker = [&](long w) {
        try {
            const long lo = cfg.paths * w / nthreads;
            const long hi = cfg.paths * (w + 1) / nthreads;
            for (long b = lo; b < hi; b += static_cast<long>(kBlock))
                run_block(s, b, std::min(hi, b + static_cast<long>(kBlock)), out, trace, trace_paths);
        } catch (...) {
            failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (nthreads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (long w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    if (trace) {
        std::ostream& os = *trace_opt.out;
        os << "path,t,y,Z,kappa,b,p,stopped\n";
        for (const auto& path : rows)
            for (const TraceRow& r : path)
                os << r.path << ',' << text::format_double(r.t) << ',' << text::format_double(r.y) << ','
                   << text::format_double(r.z) << ',' << text::format_double(r.kappa) << ','
                   << text::format_double(r.b) << ',' << text::format_double(r.p) << ',' << (r.stopped ? 1 : 0)
                   << '\n';
    }
    return out;
}

std::vector<double> values(const std::vector<Outcome>& out) {
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = out[i].value;
    return v;
}

}  // namespace

void SimConfig::validate() const {
    if (paths < 1) throw ConfigError("simulation needs at least one path");
    if (!(dt > 0.0)) throw ConfigError("simulation time step must be positive");
    if (!(horizon > 0.0)) throw ConfigError("simulation horizon must be positive");
    if (!(y0 > 0.0) || !(z0 > 0.0)) throw ConfigError("initial ratio and habit must be positive");
    if (threads < 1) throw ConfigError("simulation needs at least one thread");
}

PathStats simulate(const policy::PolicyTable& policy, const mortality::DiscountSpec& discount, const SimConfig& config,
                   const TraceOptions& trace) {
    const std::vector<Outcome> out = run(policy, discount, config, trace);
    PathStats st;
    st.paths = config.paths;
    const Estimate e = summarize(values(out));
    st.mean = e.mean;
    st.ci_half = e.ci_half;
    std::vector<double> taus;
    double wealth = 0.0;
    long never = 0;
    long ruined = 0;
    for (const Outcome& o : out) {
        st.extrapolated_lookups += o.extrapolated;
        if (o.status == Status::Stopped) {
            taus.push_back(o.tau);
            wealth += o.wealth;
        } else if (o.status == Status::Ruined) {
            ++ruined;
        } else {
            ++never;
        }
    }
    const double n = static_cast<double>(out.size());
    st.never_stopped = static_cast<double>(never) / n;
    st.ruined = static_cast<double>(ruined) / n;
    if (!taus.empty()) {
        st.mean_wealth_at_stop = wealth / static_cast<double>(taus.size());
        std::sort(taus.begin(), taus.end());
        std::array<double, 5> q{};
        for (std::size_t k = 0; k < q.size(); ++k) {
            // nearest rank
            const double rank = std::ceil(kQuantileLevels[k] * static_cast<double>(taus.size()));
            const std::size_t idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
            q[k] = taus[idx];
        }
        st.stopping_quantiles = q;
    }
    return st;
}

Estimate estimate_objective(const policy::PolicyTable& policy, const mortality::DiscountSpec& discount,
                            const SimConfig& config) {
    return summarize(values(run(policy, discount, config, {})));
}

Comparison compare(const policy::PolicyTable& a, const policy::PolicyTable& b, const mortality::DiscountSpec& discount,
                   const SimConfig& config) {
    const auto& pa = a.params;
    const auto& pb = b.params;
    const bool same = pa.market.r == pb.market.r && pa.market.mu == pb.market.mu &&
                      pa.market.sigma == pb.market.sigma && pa.prefs.beta == pb.prefs.beta &&
                      pa.prefs.gamma == pb.prefs.gamma && pa.prefs.psi == pb.prefs.psi &&
                      pa.prefs.leisure == pb.prefs.leisure && pa.prefs.alpha == pb.prefs.alpha &&
                      pa.prefs.habit_speed == pb.prefs.habit_speed && pa.annuity_rate == pb.annuity_rate &&
                      pa.effective_rate == pb.effective_rate;
    if (!same) throw ConfigError("compared policies must share market and preference parameters");
    // Same seed and path index give the same noise stream in both runs.
    const std::vector<double> va = values(run(a, discount, config, {}));
    const std::vector<double> vb = values(run(b, discount, config, {}));
    std::vector<double> diff(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) diff[i] = va[i] - vb[i];
    const Estimate d = summarize(diff);
    return {d.mean, d.ci_half, summarize(va), summarize(vb)};
}

}  // namespace annuity::sim
