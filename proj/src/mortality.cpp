#include "annuity/mortality.hpp"

#include <cmath>

#include "annuity/error.hpp"
#include "annuity/numerics.hpp"

namespace annuity::mortality {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("time must be finite and non-negative");
}

numerics::QuadratureSpec pricing_quadrature() {
    numerics::QuadratureSpec q;
    q.rel_tol = 1e-13;
    q.abs_tol = 1e-14;
    return q;
}

}  // namespace

void validate(const MortalityLaw& law) {
    std::visit(overloaded{
                   [](const Gompertz& g) {
                       if (!(g.dispersion > 0.0)) throw DomainError("Gompertz dispersion must be positive");
                       if (!(g.age >= 0.0) || !std::isfinite(g.modal))
                           throw DomainError("Gompertz age must be non-negative, modal age finite");
                   },
                   [](const ConstantForce& c) {
                       if (!(c.delta >= 0.0)) throw DomainError("constant force must be non-negative");
                   },
               },
               law);
}

double force_of_mortality(const MortalityLaw& law, double t) {
    require_time(t);
    validate(law);
    return std::visit(overloaded{
                          [t](const Gompertz& g) {
                              return std::exp((g.age + t - g.modal) / g.dispersion) / g.dispersion;
                          },
                          [](const ConstantForce& c) { return c.delta; },
                      },
                      law);
}

double integrated_hazard(const MortalityLaw& law, double t) {
    require_time(t);
    validate(law);
    return std::visit(overloaded{
                          [t](const Gompertz& g) {
                              return std::exp((g.age - g.modal) / g.dispersion) *
                                     std::expm1(t / g.dispersion);
                          },
                          [t](const ConstantForce& c) { return c.delta * t; },
                      },
                      law);
}

double survival(const MortalityLaw& law, double t) { return std::exp(-integrated_hazard(law, t)); }

double conditional_survival(const MortalityLaw& law, double t, double s) {
    if (s < t) throw DomainError("conditional survival needs s >= t");
    return std::exp(-(integrated_hazard(law, s) - integrated_hazard(law, t)));
}

MortalityLaw at_age(const MortalityLaw& law, double age) {
    if (const auto* g = std::get_if<Gompertz>(&law)) {
        Gompertz shifted = *g;
        shifted.age = age;
        return shifted;
    }
    return law;
}

double effective_rate(const DiscountSpec& spec, double t) {
    return spec.beta + force_of_mortality(spec.law, t);
}

double cumulative_discount(const DiscountSpec& spec, double s) {
    return spec.beta * s + integrated_hazard(spec.law, s);
}

double annuity_factor(const DiscountSpec& spec) {
    validate(spec.law);
    if (const auto* c = std::get_if<ConstantForce>(&spec.law)) {
        const double rate = spec.beta + c->delta;
        if (!(rate > 0.0)) throw DomainError("annuity factor diverges for a zero discount rate");
        return 1.0 / rate;
    }
    if (!(spec.beta > -1.0 / std::get<Gompertz>(spec.law).dispersion))
        throw DomainError("discount rate too negative for a convergent annuity factor");
    return numerics::integrate(
        [&spec](double s) { return std::exp(-cumulative_discount(spec, s)); }, 0.0, kPricingHorizon,
        pricing_quadrature());
}

double fair_rate(const DiscountSpec& spec) { return 1.0 / annuity_factor(spec); }

double premium(const MortalityLaw& law, double r) {
    if (!(r > 0.0)) throw DomainError("premium needs a positive interest rate");
    return annuity_factor(DiscountSpec{r, law});
}

double npr(const Gompertz& subjective, const Gompertz& objective, double r) {
    if (subjective.age != objective.age || subjective.dispersion != objective.dispersion) {
        throw ConfigError("subjective and objective laws must share age and dispersion");
    }
    return premium(subjective, r) / premium(objective, r);
}

}  // namespace annuity::mortality
