#pragma once

#include <variant>

namespace annuity::mortality {

// Gompertz law for a life currently aged `age`: force (1/dispersion) exp((age+t-modal)/dispersion).
struct Gompertz {
    double age = 60.0;
    double modal = 80.0;
    double dispersion = 10.0;
};

struct ConstantForce {
    double delta = 0.0;
};

using MortalityLaw = std::variant<Gompertz, ConstantForce>;

void validate(const MortalityLaw& law);

double force_of_mortality(const MortalityLaw& law, double t);
// Closed-form integral of the force over [0, t].
double integrated_hazard(const MortalityLaw& law, double t);
double survival(const MortalityLaw& law, double t);
// P(alive at s | alive at t) for s >= t.
double conditional_survival(const MortalityLaw& law, double t, double s);

// Same law re-anchored at a different current age (Gompertz only changes `age`).
MortalityLaw at_age(const MortalityLaw& law, double age);

struct DiscountSpec {
    double beta = 0.03;
    MortalityLaw law = Gompertz{};
};

// beta + delta_t
double effective_rate(const DiscountSpec& spec, double t);
// beta s + integral of delta over [0, s]
double cumulative_discount(const DiscountSpec& spec, double s);

// Pricing integrals truncate at this horizon for Gompertz lives.
inline constexpr double kPricingHorizon = 200.0;

double annuity_factor(const DiscountSpec& spec);
double fair_rate(const DiscountSpec& spec);

double premium(const MortalityLaw& law, double r);
// Premium under the subjective law relative to the objective (insurer) law.
double npr(const Gompertz& subjective, const Gompertz& objective, double r);

}  // namespace annuity::mortality
