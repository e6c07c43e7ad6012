#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>

#include "annuity/mortality.hpp"
#include "annuity/policy.hpp"

namespace annuity::sim {

// Euler: additive Euler-Maruyama steps of y.
// Split: the part of the drift and volatility proportional to y is stepped exactly (lognormal factor),
// the wealth-independent cash flow wage*b - kappa additively. Both truncate at y <= 0 as ruin.
enum class Scheme { Split, Euler };

struct SimConfig {
    long paths = 20000;
    double dt = 1.0 / 250.0;
    double horizon = 100.0;  // years; paths still running are closed with a flow-utility perpetuity
    std::uint64_t seed = 20240601;
    double y0 = 1.0;
    double z0 = 1.0;
    int threads = 1;  // results do not depend on this
    Scheme scheme = Scheme::Split;

    void validate() const;
};

inline constexpr std::array<double, 5> kQuantileLevels{0.05, 0.25, 0.5, 0.75, 0.95};

struct PathStats {
    long paths = 0;
    double mean = 0.0;     // realised discounted utility
    double ci_half = 0.0;  // 95% normal-approximation half-width
    std::optional<std::array<double, 5>> stopping_quantiles;  // over stopped paths, at kQuantileLevels
    double never_stopped = 0.0;
    double ruined = 0.0;
    std::optional<double> mean_wealth_at_stop;  // X = y Z at tau
    long extrapolated_lookups = 0;              // policy queried below the first node
};

// Per-path rows `path,t,y,Z,kappa,b,p,stopped` for paths [0, paths).
struct TraceOptions {
    std::ostream* out = nullptr;
    long paths = 10;
};

PathStats simulate(const policy::PolicyTable& policy, const mortality::DiscountSpec& discount,
                   const SimConfig& config, const TraceOptions& trace = {});

struct Estimate {
    double mean;
    double ci_half;
};

Estimate estimate_objective(const policy::PolicyTable& policy, const mortality::DiscountSpec& discount,
                            const SimConfig& config);

struct Comparison {
    double mean_diff;  // a - b on common noise
    double ci_half;
    Estimate a;
    Estimate b;
};

Comparison compare(const policy::PolicyTable& a, const policy::PolicyTable& b, const mortality::DiscountSpec& discount,
                   const SimConfig& config);

}  // namespace annuity::sim
