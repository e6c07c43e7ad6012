#pragma once

// Per-element formulas shared by the scalar kernels, the AVX2 tails and the model module.
// The AVX2 bodies mirror these operation by operation; keep the evaluation order in sync.

#include "annuity/kernels.hpp"

namespace annuity::kernels::detail {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

inline void ratio_dynamics_one(const RatioCoefficients& c, double y, double p, double kappa, double b,
                               double& drift, double& vol) {
    const double py = p * y;
    const double gain = c.growth * y + py * c.excess;
    const double spend = kappa * (1.0 + c.habit * y);
    drift = (gain - spend) + c.wage * b;
    vol = c.sigma * py;
}

inline void assemble_one(double drift, double half_var, double central, const StencilWeights& w, std::size_t i,
                         double eta, double& lower, double& diag, double& upper) {
    if (central != 0.0) {
        lower = -(half_var * w.w_lo[i] - drift * w.c_lo[i]);
        upper = -(half_var * w.w_hi[i] + drift * w.c_hi[i]);
    } else {
        lower = -(half_var * w.w_lo[i] + pos(-drift) * w.inv_h_lo[i]);
        upper = -(half_var * w.w_hi[i] + pos(drift) * w.inv_h_hi[i]);
    }
    diag = (eta - lower) - upper;
}

inline double residual_interior(double lo, double d, double up, double vm, double v, double vp, double rhs) {
    return ((lo * vm + d * v) + up * vp) - rhs;
}

inline double residual_at(const double* lower, const double* diag, const double* upper, const double* v,
                          const double* rhs, std::size_t i, std::size_t n) {
    double acc = diag[i] * v[i];
    if (i > 0) acc = lower[i] * v[i - 1] + acc;
    if (i + 1 < n) acc = acc + upper[i] * v[i + 1];
    return acc - rhs[i];
}

inline double min2(double a, double b) { return a < b ? a : b; }

// Split step: y' = y*exp(exponent) + shift, the proportional part stepped exactly in log space and
// the wealth-independent part (wage*b - kappa) additively.
inline void split_step_one(const RatioCoefficients& c, double p, double kappa, double b, double z, double dt,
                           double sqrt_dt, double& exponent, double& shift) {
    const double s = c.sigma * p;
    const double rate = (c.growth + p * c.excess) - kappa * c.habit;
    exponent = (rate - 0.5 * (s * s)) * dt + s * (sqrt_dt * z);
    shift = (c.wage * b - kappa) * dt;
}

inline double euler_one(double y, double drift, double vol, double z, double dt, double sqrt_dt) {
    return (y + drift * dt) + vol * (sqrt_dt * z);
}

}  // namespace annuity::kernels::detail
