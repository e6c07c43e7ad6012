#include "kernels/formulas.hpp"
#include "kernels/table.hpp"

namespace annuity::kernels::detail {

namespace {

void ratio_dynamics_scalar(const RatioCoefficients& c, const double* y, const double* p, const double* kappa,
                           const double* labor, double* drift, double* vol, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) ratio_dynamics_one(c, y[i], p[i], kappa[i], labor[i], drift[i], vol[i]);
}

void assemble_generator_scalar(const double* drift, const double* half_var, const double* central,
                               const StencilWeights& w, double eta, double* lower, double* diag, double* upper,
                               std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) assemble_one(drift[i], half_var[i], central[i], w, i, eta, lower[i], diag[i], upper[i]);
}

void tridiagonal_residual_scalar(const double* lower, const double* diag, const double* upper, const double* v,
                                 const double* rhs, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = residual_at(lower, diag, upper, v, rhs, i, n);
}

void complementarity_scalar(const double* residual, const double* v, const double* g, double* out,
                            std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = min2(residual[i], v[i] - g[i]);
}

void euler_update_scalar(double* y, const double* drift, const double* vol, const double* z, double dt,
                         double sqrt_dt, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = euler_one(y[i], drift[i], vol[i], z[i], dt, sqrt_dt);
}

void split_step_scalar(const RatioCoefficients& c, const double* p, const double* kappa, const double* labor,
                       const double* z, double dt, double sqrt_dt, double* exponent, double* shift, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        split_step_one(c, p[i], kappa[i], labor[i], z[i], dt, sqrt_dt, exponent[i], shift[i]);
}

void accumulate_scalar(double* acc, const double* x, double weight, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] = acc[i] + weight * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{ratio_dynamics_scalar,  assemble_generator_scalar, tridiagonal_residual_scalar,
                                   complementarity_scalar, euler_update_scalar,    split_step_scalar,
                                   accumulate_scalar};
    return table;
}

}  // namespace annuity::kernels::detail
