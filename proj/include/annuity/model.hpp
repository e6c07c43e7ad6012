#pragma once

#include <string>
#include <vector>

namespace annuity::model {

struct MarketParams {
    double r = 0.02;
    double mu = 0.07;
    double sigma = 0.2;

    double price_of_risk() const { return (mu - r) / sigma; }
};

struct PreferenceParams {
    double beta = 0.03;
    double gamma = 2.0;
    double psi = 0.5;
    double leisure = 1.0;      // l-bar
    double alpha = 0.9;        // habit floor kappa >= alpha
    double habit_speed = 0.1;  // rho-tilde
};

struct LaborParams {
    double wage = 10.0;
    double max_labor = 0.8;
};

struct ModelParams {
    MarketParams market;
    PreferenceParams prefs;
    LaborParams labor;
    double annuity_rate = 0.0;    // k
    double effective_rate = 0.0;  // eta at the evaluation age
};

struct Violation {
    std::string name;
    std::string detail;
};

// Every violated invariant, empty when the parameters are admissible.
std::vector<Violation> validate(const ModelParams& params);

double utility(double kappa, double labor, const PreferenceParams& prefs);
double marginal_utility_consumption(double kappa, double labor, const PreferenceParams& prefs);
double marginal_utility_labor(double kappa, double labor, const PreferenceParams& prefs);

struct Dynamics {
    double drift;
    double diffusion;
};

Dynamics drift_diffusion_y(double y, double p, double kappa, double labor, const ModelParams& params);

struct Obstacle {
    double value;
    double d1;
    double d2;
};

// Value of annuitizing immediately at ratio y, with first and second derivatives.
Obstacle obstacle(double y, const ModelParams& params);
double obstacle_G(double y, const ModelParams& params);

double merton_weight(const ModelParams& params);

}  // namespace annuity::model
