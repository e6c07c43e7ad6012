#include "annuity/hjb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "annuity/error.hpp"
#include "annuity/kernels.hpp"
#include "annuity/numerics.hpp"

namespace annuity::hjb {

using model::ModelParams;

namespace {

constexpr double kRootTol = 1e-14;

// Frequently used parameter combinations for the per-node control search.
struct Ctx {
    double gamma, psi, lbar, alpha, rho, wage, bbar;
    double growth, excess, sigma, theta_over_sigma;
    double kappa_max;
    double portfolio_cap;

    Ctx(const ModelParams& p, double kmax, double cap)
        : gamma(p.prefs.gamma),
          psi(p.prefs.psi),
          lbar(p.prefs.leisure),
          alpha(p.prefs.alpha),
          rho(p.prefs.habit_speed),
          wage(p.labor.wage),
          bbar(p.labor.max_labor),
          growth(p.market.r + p.prefs.habit_speed),
          excess(p.market.mu - p.market.r),
          sigma(p.market.sigma),
          theta_over_sigma((p.market.mu - p.market.r) / (p.market.sigma * p.market.sigma)),
          kappa_max(kmax),
          portfolio_cap(cap) {}

    double leisure_pow(double b) const { return std::pow(lbar - b, psi * (1.0 - gamma)); }
    double u(double k, double b) const { return std::pow(k * std::pow(lbar - b, psi), 1.0 - gamma) / (1.0 - gamma); }
    double u_k(double k, double b) const { return std::pow(k, -gamma) * leisure_pow(b); }
    double u_b(double k, double b) const {
        return -psi * std::pow(k, 1.0 - gamma) * std::pow(lbar - b, psi * (1.0 - gamma) - 1.0);
    }
    double clamp_kappa(double k) const { return std::min(std::max(k, alpha), kappa_max); }
};

struct ConsLabor {
    double kappa;
    double labor;
};

// Consumption FOC u_k = s c for fixed labor, clamped to [alpha, kappa_max].
double kappa_for(const Ctx& x, double s, double c, double b) {
    return x.clamp_kappa(std::pow(s * c / x.leisure_pow(b), -1.0 / x.gamma));
}

// Maximises u(k,b) - s*c*k + s*w*b over k in [alpha, kappa_max], b in [0, bbar].
ConsLabor consumption_labor(const Ctx& x, double s, double c) {
    if (!(s > 0.0)) return {x.kappa_max, 0.0};
    if (!(x.bbar > 0.0) || !(x.wage > 0.0)) return {kappa_for(x, s, c, 0.0), 0.0};
    // Envelope derivative in b; decreasing because u is jointly concave.
    auto slope = [&](double b) { return x.u_b(kappa_for(x, s, c, b), b) + s * x.wage; };
    if (slope(0.0) <= 0.0) return {kappa_for(x, s, c, 0.0), 0.0};
    if (slope(x.bbar) >= 0.0) return {kappa_for(x, s, c, x.bbar), x.bbar};
    const double b = numerics::find_root_bracketed(slope, 0.0, x.bbar, kRootTol);
    return {kappa_for(x, s, c, b), b};
}

// Best (k, b) with k*c = base + w*b; feasible=false when no such pair respects the bounds.
ConsLabor zero_drift(const Ctx& x, double base, double c, bool& feasible) {
    if (!(x.bbar > 0.0) || !(x.wage > 0.0)) {
        const double k = base / c;
        feasible = k >= x.alpha && k <= x.kappa_max;
        return {x.clamp_kappa(k), 0.0};
    }
    const double b_lo = std::max(0.0, (x.alpha * c - base) / x.wage);
    const double b_hi = std::min(x.bbar, (x.kappa_max * c - base) / x.wage);
    if (b_lo > b_hi) {
        feasible = false;
        return base + x.wage * x.bbar < x.alpha * c ? ConsLabor{x.alpha, x.bbar} : ConsLabor{x.kappa_max, 0.0};
    }
    feasible = true;
    auto kappa_of = [&](double b) { return x.clamp_kappa((base + x.wage * b) / c); };
    auto slope = [&](double b) {
        const double k = kappa_of(b);
        return x.u_k(k, b) * x.wage / c + x.u_b(k, b);
    };
    double b = b_lo;
    if (b_hi > b_lo) {
        if (slope(b_lo) <= 0.0) {
            b = b_lo;
        } else if (slope(b_hi) >= 0.0) {
            b = b_hi;
        } else {
            b = numerics::find_root_bracketed(slope, b_lo, b_hi, kRootTol);
        }
    }
    return {kappa_of(b), b};
}

enum class Branch { Central, Forward, Backward, ZeroDrift, Clipped };

struct NodeControl {
    double p = 0.0;
    double kappa = 0.0;
    double labor = 0.0;
    double u = 0.0;
    Branch branch = Branch::ZeroDrift;
    bool nonconcave = false;
};

struct Slopes {
    bool has_forward, has_backward, allow_portfolio, try_central;
    double forward, backward, central, second;
    double w_lo, w_hi, c_lo, c_hi;
};

NodeControl node_control(const Ctx& x, double y, const Slopes& s) {
    NodeControl out;
    const double c = 1.0 + x.rho * y;
    if (s.allow_portfolio) {
        if (s.second < 0.0 && s.central > 0.0) {
            const double p = -x.theta_over_sigma * s.central / (y * s.second);
            out.p = std::min(std::max(p, -x.portfolio_cap), x.portfolio_cap);
        } else {
            out.nonconcave = true;
            if (s.central > 0.0 && x.excess != 0.0) out.p = x.excess > 0.0 ? x.portfolio_cap : -x.portfolio_cap;
        }
    }
    const double py = out.p * y;
    const double base = x.growth * y + py * x.excess;

    struct Candidate {
        ConsLabor cl;
        double drift;
        double h;
        bool valid;
    };
    auto candidate = [&](double slope, bool forward) {
        const ConsLabor cl = consumption_labor(x, slope, c);
        const double drift = (base - cl.kappa * c) + x.wage * cl.labor;
        const double h = x.u(cl.kappa, cl.labor) + slope * drift;
        return Candidate{cl, drift, h, forward ? drift > 0.0 : drift < 0.0};
    };
    auto take = [&](const ConsLabor& cl, Branch br) {
        out.kappa = cl.kappa;
        out.labor = cl.labor;
        out.u = x.u(cl.kappa, cl.labor);
        out.branch = br;
    };
    if (s.try_central && s.central > 0.0) {
        const ConsLabor cl = consumption_labor(x, s.central, c);
        const double drift = (base - cl.kappa * c) + x.wage * cl.labor;
        const double vol = x.sigma * py;
        const double hv = 0.5 * vol * vol;
        const double lower = -(hv * s.w_lo - drift * s.c_lo);
        const double upper = -(hv * s.w_hi + drift * s.c_hi);
        if (lower <= 0.0 && upper <= 0.0) {
            take(cl, Branch::Central);
            return out;
        }
    }
    Candidate f{}, b{};
    if (s.has_forward) f = candidate(s.forward, true);
    if (s.has_backward) b = candidate(s.backward, false);
    if (f.valid && b.valid) {
        if (f.h >= b.h) take(f.cl, Branch::Forward);
        else take(b.cl, Branch::Backward);
    } else if (f.valid) {
        take(f.cl, Branch::Forward);
    } else if (b.valid) {
        take(b.cl, Branch::Backward);
    } else {
        bool feasible = false;
        const ConsLabor cl = zero_drift(x, base, c, feasible);
        take(cl, feasible ? Branch::ZeroDrift : Branch::Clipped);
    }
    return out;
}

void thomas(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
            std::vector<double>& rhs, std::vector<double>& out) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    out[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
}

std::string join_violations(const std::vector<model::Violation>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "; " : "") << v[i].name << " (" << v[i].detail << ")";
    return os.str();
}

// Lagrange interpolant through up to four nodes.
struct Lagrange {
    std::array<double, 4> xs{};
    std::array<double, 4> ys{};
    int m = 0;

    double operator()(double t) const {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            double w = 1.0;
            for (int j = 0; j < m; ++j)
                if (j != i) w *= (t - xs[j]) / (xs[i] - xs[j]);
            acc += w * ys[i];
        }
        return acc;
    }
};

Lagrange branch_through(const SolveResult& r, std::size_t first, int count) {
    Lagrange l;
    l.m = count;
    for (int i = 0; i < count; ++i) {
        l.xs[i] = r.y[first + i];
        l.ys[i] = r.value[first + i];
    }
    return l;
}

struct Derivs {
    double v, d1, d2;
};

Derivs derivs_at(const Lagrange& l, double t, double h) {
    const numerics::Function f = [&l](double s) { return l(s); };
    return {l(t), numerics::derivative_fd(f, t, 1, h), numerics::derivative_fd(f, t, 2, h)};
}

// Local quadratic of V - G through the last three continuation nodes before the first stopped node j.
// The stopped node is excluded because its value is imposed, not solved.
struct ContactFit {
    double point;     // value-matching point of the fit, or its closest approach to G
    double mismatch;  // sqrt|q'^2 - 2 q q''|: the slope gap at the crossing, zero only for tangency
    double curvature; // q'' = V'' - G'' on the continuation side
};

ContactFit contact_fit(const SolveResult& r, std::size_t j) {
    Lagrange q;
    q.m = 3;
    for (int i = 0; i < 3; ++i) {
        const std::size_t k = j - 3 + static_cast<std::size_t>(i);
        q.xs[i] = r.y[k];
        q.ys[i] = r.value[k] - r.obstacle[k];
    }
    const double x = r.y[j - 1];
    const Derivs d = derivs_at(q, x, 0.1 * (r.y[j] - x));
    const double disc = d.d1 * d.d1 - 2.0 * d.d2 * d.v;
    ContactFit f{r.y[j], std::sqrt(std::abs(disc)), d.d2};
    if (d.d2 > 0.0) {
        f.point = disc >= 0.0 ? x + (-d.d1 - std::sqrt(disc)) / d.d2 : x - d.d1 / d.d2;
    } else if (d.d1 < 0.0) {
        f.point = x - d.v / d.d1;
    }
    return f;
}

}  // namespace

const char* region_name(Region r) {
    switch (r) {
        case Region::Interior: return "interior";
        case Region::Corner: return "corner";
        case Region::Stopped: return "stopped";
    }
    return "?";
}

Region parse_region(const std::string& s) {
    if (s == "interior") return Region::Interior;
    if (s == "corner") return Region::Corner;
    if (s == "stopped") return Region::Stopped;
    throw ConfigError("unknown region label '" + s + "'");
}

void Grid::validate() const {
    if (!(y_min > 0.0) || !(y_max > y_min)) throw DomainError("grid needs 0 < y_min < y_max");
    if (n < 3) throw DomainError("grid needs at least 3 nodes");
}

std::vector<double> Grid::nodes() const {
    validate();
    std::vector<double> y(static_cast<std::size_t>(n));
    const double a = spacing == Spacing::Log ? std::log(y_min) : y_min;
    const double b = spacing == Spacing::Log ? std::log(y_max) : y_max;
    for (int i = 0; i < n; ++i) {
        const double t = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        y[static_cast<std::size_t>(i)] = spacing == Spacing::Log ? std::exp(t) : t;
    }
    y.front() = y_min;
    y.back() = y_max;
    return y;
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (max_sweeps < 1) throw ConfigError("solver needs at least one sweep");
    if (obstacle == ObstacleMode::Penalty && !(penalty > 0.0)) throw ConfigError("penalty coefficient must be positive");
    if (!(portfolio_cap > 0.0)) throw ConfigError("portfolio cap must be positive");
}

ControlChoice maximize_hamiltonian(double y, double v1, double v2, const ModelParams& params) {
    if (!(v2 < 0.0)) throw NonConcave("value estimate is not strictly concave at y=" + std::to_string(y));
    if (!(v1 > 0.0)) throw DegenerateMarginalValue("marginal value is not positive at y=" + std::to_string(y));
    if (!(y > 0.0)) throw DomainError("maximize_hamiltonian needs y > 0");
    const Ctx x(params, HUGE_VAL, HUGE_VAL);
    const double p = -x.theta_over_sigma * v1 / (y * v2);
    const double c = 1.0 + x.rho * y;
    const ConsLabor cl = consumption_labor(x, v1, c);
    const model::Dynamics d = model::drift_diffusion_y(y, p, cl.kappa, cl.labor, params);
    const double h = x.u(cl.kappa, cl.labor) + v1 * d.drift + 0.5 * d.diffusion * d.diffusion * v2;
    return {p, cl.kappa, cl.labor, h};
}

SolveResult solve_vi(const Grid& grid, const ModelParams& params, const SolverConfig& config) {
    grid.validate();
    config.validate();
    if (auto v = model::validate(params); !v.empty()) throw ConfigError("invalid parameters: " + join_violations(v));

    const std::vector<double> y = grid.nodes();
    const std::size_t n = y.size();
    const bool with_obstacle = config.obstacle != ObstacleMode::Disabled;
    const double eta = params.effective_rate;
    const Ctx x(params, std::max(10.0, 2.0 * params.annuity_rate * grid.y_max), config.portfolio_cap);
    const kernels::RatioCoefficients coef{x.growth, x.excess, x.rho, x.wage, x.sigma};

    std::vector<double> g(n), g1(n);
    for (std::size_t i = 0; i < n; ++i) {
        const model::Obstacle o = model::obstacle(y[i], params);
        g[i] = o.value;
        g1[i] = o.d1;
    }

    // Spacing weights; the boundary nodes only see the neighbour that exists.
    std::vector<double> inv_lo(n, 0.0), inv_hi(n, 0.0), w_lo(n, 0.0), w_hi(n, 0.0), c_lo(n, 0.0), c_hi(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = y[i] - y[i - 1];
        const double hh = y[i + 1] - y[i];
        inv_lo[i] = 1.0 / hl;
        inv_hi[i] = 1.0 / hh;
        w_lo[i] = 2.0 / (hl * (hl + hh));
        w_hi[i] = 2.0 / (hh * (hl + hh));
        c_lo[i] = hh / (hl * (hl + hh));
        c_hi[i] = hl / (hh * (hl + hh));
    }
    const kernels::StencilWeights weights{inv_lo.data(), inv_hi.data(), w_lo.data(),
                                          w_hi.data(),   c_lo.data(),   c_hi.data()};
    const bool hybrid = config.upwind == Upwind::Hybrid;
    inv_hi[0] = 1.0 / (y[1] - y[0]);
    inv_lo[n - 1] = 1.0 / (y[n - 1] - y[n - 2]);

    std::vector<NodeControl> ctl(n);
    std::vector<double> p(n), kap(n), lab(n), u(n), drift(n), vol(n), half_var(n), central(n);
    std::vector<double> lower(n), diag(n), upper(n), residual(n);
    std::vector<double> ml(n), md(n), mu(n), mr(n), v_new(n);
    std::vector<char> stopped(n, 0);

    auto compute_controls = [&](const std::vector<double>& v) {
        int nonconcave = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Slopes s{};
            s.has_forward = i + 1 < n;
            s.has_backward = i > 0;
            if (s.has_forward) s.forward = (v[i + 1] - v[i]) * inv_hi[i];
            if (s.has_backward) s.backward = (v[i] - v[i - 1]) * inv_lo[i];
            s.allow_portfolio = s.has_forward && s.has_backward;
            if (s.allow_portfolio) {
                const double hl = y[i] - y[i - 1];
                const double hh = y[i + 1] - y[i];
                s.central = (hl * s.forward + hh * s.backward) / (hl + hh);
                s.second = 2.0 * (s.forward - s.backward) / (hl + hh);
                s.try_central = hybrid;
                s.w_lo = w_lo[i];
                s.w_hi = w_hi[i];
                s.c_lo = c_lo[i];
                s.c_hi = c_hi[i];
            }
            ctl[i] = node_control(x, y[i], s);
            p[i] = ctl[i].p;
            kap[i] = ctl[i].kappa;
            lab[i] = ctl[i].labor;
            u[i] = ctl[i].u;
            central[i] = ctl[i].branch == Branch::Central ? 1.0 : 0.0;
            if (ctl[i].nonconcave && !stopped[i]) ++nonconcave;
        }
        kernels::ratio_dynamics(coef, y.data(), p.data(), kap.data(), lab.data(), drift.data(), vol.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            if (ctl[i].branch == Branch::ZeroDrift || ctl[i].branch == Branch::Clipped) drift[i] = 0.0;
            half_var[i] = 0.5 * vol[i] * vol[i];
        }
        // State constraints: no outflow through either end of the grid.
        if (drift[0] < 0.0) drift[0] = 0.0;
        if (drift[n - 1] > 0.0) drift[n - 1] = 0.0;
        kernels::assemble_generator(drift.data(), half_var.data(), central.data(), weights, eta, lower.data(),
                                    diag.data(), upper.data(), n);
        return nonconcave;
    };

    auto solve_rows = [&](const std::vector<char>& active, double pen) {
        ml = lower;
        md = diag;
        mu = upper;
        mr = u;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (pen > 0.0) {
                md[i] += pen;
                mr[i] += pen * g[i];
            } else {
                ml[i] = 0.0;
                mu[i] = 0.0;
                md[i] = 1.0;
                mr[i] = g[i];
            }
        }
        thomas(ml, md, mu, mr, v_new);
    };

    auto obstacle_step = [&]() {
        if (!with_obstacle) {
            std::vector<char> none(n, 0);
            solve_rows(none, 0.0);
            return;
        }
        const bool penalty = config.obstacle == ObstacleMode::Penalty;
        const std::size_t max_inner = n + 1;
        for (std::size_t it = 0; it < max_inner; ++it) {
            solve_rows(stopped, penalty ? config.penalty : 0.0);
            std::vector<char> next(n);
            if (penalty) {
                for (std::size_t i = 0; i < n; ++i) next[i] = v_new[i] < g[i];
            } else {
                kernels::tridiagonal_residual(lower.data(), diag.data(), upper.data(), v_new.data(), u.data(),
                                              residual.data(), n);
                for (std::size_t i = 0; i < n; ++i) next[i] = stopped[i] ? !(residual[i] < 0.0) : v_new[i] < g[i];
            }
            next[n - 1] = 1;
            if (next == stopped) return;
            stopped.swap(next);
        }
    };

    std::vector<double> v = g;
    if (with_obstacle) stopped[n - 1] = 1;
    double delta = HUGE_VAL;
    int sweep = 0;
    while (sweep < config.max_sweeps) {
        ++sweep;
        compute_controls(v);
        obstacle_step();
        delta = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            delta = std::max(delta, std::abs(v_new[i] - v[i]) / std::max(1.0, std::abs(v_new[i])));
        v.swap(v_new);
        if (!std::isfinite(delta)) throw NoConvergence("value iteration diverged", delta);
        if (delta <= config.tolerance) break;
    }
    if (delta > config.tolerance) {
        throw NoConvergence("policy iteration did not converge in " + std::to_string(config.max_sweeps) +
                                " sweeps (last update " + std::to_string(delta) + ")",
                            delta);
    }

    SolveResult r;
    r.mode = config.obstacle;
    r.y = y;
    r.obstacle = g;
    r.obstacle_slope = g1;
    Diagnostics& dg = r.diagnostics;
    dg.sweeps = sweep;
    dg.last_update = delta;
    if (config.obstacle == ObstacleMode::Penalty) {
        for (std::size_t i = 0; i < n; ++i) stopped[i] = v[i] <= g[i];
        stopped[n - 1] = 1;
        for (std::size_t i = 0; i < n; ++i)
            if (stopped[i]) v[i] = g[i];
    }
    dg.nonconcave_nodes = compute_controls(v);
    kernels::tridiagonal_residual(lower.data(), diag.data(), upper.data(), v.data(), u.data(), residual.data(), n);
    dg.hjb_residual = residual;
    dg.complementarity.resize(n);
    if (with_obstacle) {
        kernels::complementarity(residual.data(), v.data(), g.data(), dg.complementarity.data(), n);
    } else {
        dg.complementarity = residual;
    }
    for (double c : dg.complementarity) dg.max_complementarity = std::max(dg.max_complementarity, std::abs(c));

    const double merton = model::merton_weight(params);
    r.value = v;
    r.portfolio.resize(n);
    r.kappa.resize(n);
    r.labor.resize(n);
    r.region.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (with_obstacle && stopped[i]) {
            r.value[i] = g[i];
            r.kappa[i] = params.annuity_rate * y[i];
            r.labor[i] = 0.0;
            r.portfolio[i] = merton;
            r.region[i] = Region::Stopped;
        } else {
            r.kappa[i] = kap[i];
            r.labor[i] = lab[i];
            r.portfolio[i] = p[i];
            r.region[i] = x.bbar > 0.0 && lab[i] >= x.bbar ? Region::Corner : Region::Interior;
        }
    }

    const Thresholds t = extract_thresholds(r, with_obstacle);
    if (with_obstacle && t.y_star_node && *t.y_star_node == n - 1) {
        throw GridTooSmall("stopping region starts at y_max=" + std::to_string(grid.y_max) +
                           "; raise grid.y_max");
    }
    r.y_tilde = t.y_tilde;
    r.y_star = t.y_star;
    dg.boundary = boundary_diagnostics(r, params);
    return r;
}

Thresholds extract_thresholds(const SolveResult& r, bool require_stopping) {
    Thresholds t;
    const std::size_t n = r.y.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!t.y_tilde_node && r.region[i] == Region::Corner) t.y_tilde_node = i;
        if (r.region[i] == Region::Stopped) {
            t.y_star_node = i;
            break;
        }
    }
    if (!t.y_star_node) {
        if (require_stopping) throw GridTooSmall("no stopped node on the grid; raise grid.y_max");
    } else {
        const std::size_t j = *t.y_star_node;
        t.y_star = r.y[j];
        // Refine to the contact point of the continuation branch when it falls inside the bracketing cell.
        if (j >= 3 && r.obstacle.size() == n) {
            const double c = contact_fit(r, j).point;
            if (c > r.y[j - 1] && c <= r.y[j]) t.y_star = c;
        }
    }
    if (t.y_tilde_node) t.y_tilde = r.y[*t.y_tilde_node];
    return t;
}

BoundaryDiagnostics boundary_diagnostics(const SolveResult& r, const ModelParams& params) {
    BoundaryDiagnostics d;
    const Thresholds t = extract_thresholds(r, false);
    if (t.y_star_node && *t.y_star_node >= 3) {
        const std::size_t j = *t.y_star_node;
        const ContactFit f = contact_fit(r, j);
        d.value_matching = std::abs(r.value[j] - model::obstacle(r.y[j], params).value);
        d.smooth_pasting = f.mismatch;
        d.super_contact = std::abs(f.curvature);
    }
    if (t.y_tilde_node) {
        const std::size_t i = *t.y_tilde_node;
        const std::size_t stop = t.y_star_node.value_or(r.y.size());
        if (i >= 4 && i + 4 <= stop) {
            const double yt = r.y[i];
            const double h = 0.1 * (yt - r.y[i - 1]);
            const Derivs left = derivs_at(branch_through(r, i - 4, 4), yt, h);
            const Derivs right = derivs_at(branch_through(r, i, 4), yt, h);
            d.labor_jump_value = std::abs(left.v - right.v);
            d.labor_jump_d1 = std::abs(left.d1 - right.d1);
            d.labor_jump_d2 = std::abs(left.d2 - right.d2);
        }
    }
    return d;
}

}  // namespace annuity::hjb
