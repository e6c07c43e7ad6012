#pragma once

#include <cstddef>

// Vectorisable inner loops. Every kernel has a scalar reference and an AVX2 variant that
// produce bitwise identical results; the variant is chosen once at runtime.
namespace annuity::kernels {

enum class Isa { Scalar, Avx2 };

bool isa_available(Isa isa);
Isa active_isa();
// Forces a variant (falls back to scalar if unavailable); returns the previous one.
Isa set_isa(Isa isa);
const char* isa_name(Isa isa);

// Coefficients of the ratio SDE: drift = growth*y + (p*y)*excess - kappa*(1 + habit*y) + wage*b,
// vol = sigma*(p*y).
struct RatioCoefficients {
    double growth;  // r + rho
    double excess;  // mu - r
    double habit;   // rho
    double wage;
    double sigma;
};

void ratio_dynamics(const RatioCoefficients& c, const double* y, const double* p, const double* kappa,
                    const double* labor, double* drift, double* vol, std::size_t n);

// Per-node spacing weights of a three-point stencil.
struct StencilWeights {
    const double* inv_h_lo;  // 1/h_lo, upwind backward difference
    const double* inv_h_hi;  // 1/h_hi, upwind forward difference
    const double* w_lo;      // 2/(h_lo (h_lo+h_hi)), second difference
    const double* w_hi;      // 2/(h_hi (h_lo+h_hi))
    const double* c_lo;      // h_hi/(h_lo (h_lo+h_hi)), central first difference
    const double* c_hi;      // h_lo/(h_hi (h_lo+h_hi))
};

// Implicit generator rows for eta*V - drift*V' - half_var*V'' at each node. Where central[i] != 0:
//   lower = -(half_var*w_lo - drift*c_lo),            upper = -(half_var*w_hi + drift*c_hi)
// otherwise upwind:
//   lower = -(half_var*w_lo + max(-drift,0)*inv_h_lo), upper = -(half_var*w_hi + max(drift,0)*inv_h_hi)
// and diag = eta - lower - upper.
void assemble_generator(const double* drift, const double* half_var, const double* central,
                        const StencilWeights& w, double eta, double* lower, double* diag, double* upper,
                        std::size_t n);

// out_i = lower_i v_{i-1} + diag_i v_i + upper_i v_{i+1} - rhs_i (missing neighbours dropped).
void tridiagonal_residual(const double* lower, const double* diag, const double* upper, const double* v,
                          const double* rhs, double* out, std::size_t n);

// out_i = min(residual_i, v_i - g_i)
void complementarity(const double* residual, const double* v, const double* g, double* out, std::size_t n);

// y_i += drift_i*dt + vol_i*(sqrt_dt*z_i)
void euler_update(double* y, const double* drift, const double* vol, const double* z, double dt,
                  double sqrt_dt, std::size_t n);

// Positivity-friendly step of the ratio SDE, y' = y*exp(exponent) + shift, with s = sigma*p:
//   exponent = ((growth + p*excess) - kappa*habit - 0.5*s^2)*dt + s*(sqrt_dt*z),  shift = (wage*b - kappa)*dt
void split_step(const RatioCoefficients& c, const double* p, const double* kappa, const double* labor,
                const double* z, double dt, double sqrt_dt, double* exponent, double* shift, std::size_t n);

// acc_i += weight*x_i
void accumulate(double* acc, const double* x, double weight, std::size_t n);

}  // namespace annuity::kernels
