#include "annuity/model.hpp"

#include <cmath>
#include <sstream>

#include "annuity/error.hpp"
#include "kernels/formulas.hpp"

namespace annuity::model {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

void check_utility_args(double kappa, double labor, const PreferenceParams& prefs) {
    if (!(kappa > 0.0)) throw DomainError("utility needs kappa > 0, got " + fmt(kappa));
    if (!(labor >= 0.0) || !(labor < prefs.leisure))
        throw DomainError("utility needs 0 <= b < leisure endowment, got b=" + fmt(labor));
}

}  // namespace

std::vector<Violation> validate(const ModelParams& params) {
    std::vector<Violation> out;
    auto need = [&out](bool ok, const char* name, std::string detail) {
        if (!ok) out.push_back({name, std::move(detail)});
    };
    const auto& m = params.market;
    const auto& p = params.prefs;
    const auto& l = params.labor;
    need(m.r > 0.0, "risk-free rate positive", "r=" + fmt(m.r));
    need(m.sigma > 0.0, "volatility positive", "sigma=" + fmt(m.sigma));
    need(std::isfinite(m.mu), "expected return finite", "mu=" + fmt(m.mu));
    need(p.beta > 0.0, "discount positive", "beta=" + fmt(p.beta));
    need(p.gamma > 0.0 && p.gamma != 1.0, "risk aversion", "gamma=" + fmt(p.gamma) + " must be > 0 and != 1");
    need(p.psi > 0.0, "leisure weight", "psi=" + fmt(p.psi));
    need(p.leisure > 0.0, "leisure endowment", "lbar=" + fmt(p.leisure));
    need(p.alpha > 0.0 && p.alpha <= 1.0, "habit addictiveness", "alpha=" + fmt(p.alpha) + " not in (0,1]");
    need(p.habit_speed > 0.0, "habit speed", "rho=" + fmt(p.habit_speed));
    need(m.r > p.habit_speed * (1.0 - p.alpha), "viability",
         "r=" + fmt(m.r) + " must exceed rho*(1-alpha)=" + fmt(p.habit_speed * (1.0 - p.alpha)));
    need(l.wage >= 0.0, "wage", "w=" + fmt(l.wage) + " must be non-negative");
    need(l.max_labor >= 0.0 && l.max_labor < p.leisure, "labor cap",
         "bbar=" + fmt(l.max_labor) + " must lie in [0, lbar)");
    need(params.annuity_rate > m.r, "annuity rate", "k=" + fmt(params.annuity_rate) + " must exceed r");
    need(params.effective_rate > p.beta, "effective rate",
         "eta=" + fmt(params.effective_rate) + " must exceed beta");
    return out;
}

double utility(double kappa, double labor, const PreferenceParams& prefs) {
    check_utility_args(kappa, labor, prefs);
    const double g = 1.0 - prefs.gamma;
    return std::pow(kappa * std::pow(prefs.leisure - labor, prefs.psi), g) / g;
}

double marginal_utility_consumption(double kappa, double labor, const PreferenceParams& prefs) {
    check_utility_args(kappa, labor, prefs);
    return std::pow(kappa, -prefs.gamma) * std::pow(prefs.leisure - labor, prefs.psi * (1.0 - prefs.gamma));
}

double marginal_utility_labor(double kappa, double labor, const PreferenceParams& prefs) {
    check_utility_args(kappa, labor, prefs);
    return -prefs.psi * std::pow(kappa, 1.0 - prefs.gamma) *
           std::pow(prefs.leisure - labor, prefs.psi * (1.0 - prefs.gamma) - 1.0);
}

Dynamics drift_diffusion_y(double y, double p, double kappa, double labor, const ModelParams& params) {
    const kernels::RatioCoefficients c{params.market.r + params.prefs.habit_speed,
                                       params.market.mu - params.market.r, params.prefs.habit_speed,
                                       params.labor.wage, params.market.sigma};
    Dynamics d{};
    kernels::detail::ratio_dynamics_one(c, y, p, kappa, labor, d.drift, d.diffusion);
    return d;
}

Obstacle obstacle(double y, const ModelParams& params) {
    if (!(y > 0.0)) throw DomainError("obstacle needs y > 0, got " + fmt(y));
    const double gamma = params.prefs.gamma;
    const double k = params.annuity_rate;
    const double eta = params.effective_rate;
    const double slope = std::pow(k, 1.0 - gamma) * std::pow(y, -gamma) / eta;
    return {std::pow(k * y, 1.0 - gamma) / (eta * (1.0 - gamma)), slope, -gamma * slope / y};
}

double obstacle_G(double y, const ModelParams& params) { return obstacle(y, params).value; }

double merton_weight(const ModelParams& params) {
    const auto& m = params.market;
    return (m.mu - m.r) / (m.sigma * m.sigma * params.prefs.gamma);
}

}  // namespace annuity::model
