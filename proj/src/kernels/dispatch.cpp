#include <atomic>

#include "annuity/kernels.hpp"
#include "kernels/table.hpp"

namespace annuity::kernels {

namespace {

Isa detect() {
#ifdef ANNUITY_HAVE_AVX2
    if (__builtin_cpu_supports("avx2")) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

std::atomic<Isa>& current() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

const detail::KernelTable& table() {
#ifdef ANNUITY_HAVE_AVX2
    if (current().load(std::memory_order_relaxed) == Isa::Avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

}  // namespace

bool isa_available(Isa isa) {
    if (isa == Isa::Scalar) return true;
#ifdef ANNUITY_HAVE_AVX2
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() { return current().load(); }

Isa set_isa(Isa isa) { return current().exchange(isa_available(isa) ? isa : Isa::Scalar); }

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void ratio_dynamics(const RatioCoefficients& c, const double* y, const double* p, const double* kappa,
                    const double* labor, double* drift, double* vol, std::size_t n) {
    table().ratio_dynamics(c, y, p, kappa, labor, drift, vol, n);
}

void assemble_generator(const double* drift, const double* half_var, const double* central,
                        const StencilWeights& w, double eta, double* lower, double* diag, double* upper,
                        std::size_t n) {
    table().assemble_generator(drift, half_var, central, w, eta, lower, diag, upper, n);
}

void tridiagonal_residual(const double* lower, const double* diag, const double* upper, const double* v,
                          const double* rhs, double* out, std::size_t n) {
    table().tridiagonal_residual(lower, diag, upper, v, rhs, out, n);
}

void complementarity(const double* residual, const double* v, const double* g, double* out, std::size_t n) {
    table().complementarity(residual, v, g, out, n);
}

void euler_update(double* y, const double* drift, const double* vol, const double* z, double dt, double sqrt_dt,
                  std::size_t n) {
    table().euler_update(y, drift, vol, z, dt, sqrt_dt, n);
}

void split_step(const RatioCoefficients& c, const double* p, const double* kappa, const double* labor,
                const double* z, double dt, double sqrt_dt, double* exponent, double* shift, std::size_t n) {
    table().split_step(c, p, kappa, labor, z, dt, sqrt_dt, exponent, shift, n);
}

void accumulate(double* acc, const double* x, double weight, std::size_t n) {
    table().accumulate(acc, x, weight, n);
}

}  // namespace annuity::kernels
