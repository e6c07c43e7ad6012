#include <immintrin.h>

#include "kernels/formulas.hpp"
#include "kernels/table.hpp"

namespace annuity::kernels::detail {

namespace {

constexpr std::size_t kLanes = 4;

inline __m256d pos_v(__m256d x) { return _mm256_max_pd(x, _mm256_setzero_pd()); }

inline __m256d neg_v(__m256d x) { return _mm256_xor_pd(x, _mm256_set1_pd(-0.0)); }

void ratio_dynamics_avx2(const RatioCoefficients& c, const double* y, const double* p, const double* kappa,
                         const double* labor, double* drift, double* vol, std::size_t n) {
    const __m256d growth = _mm256_set1_pd(c.growth);
    const __m256d excess = _mm256_set1_pd(c.excess);
    const __m256d habit = _mm256_set1_pd(c.habit);
    const __m256d wage = _mm256_set1_pd(c.wage);
    const __m256d sigma = _mm256_set1_pd(c.sigma);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d yv = _mm256_loadu_pd(y + i);
        const __m256d py = _mm256_mul_pd(_mm256_loadu_pd(p + i), yv);
        const __m256d gain = _mm256_add_pd(_mm256_mul_pd(growth, yv), _mm256_mul_pd(py, excess));
        const __m256d spend =
            _mm256_mul_pd(_mm256_loadu_pd(kappa + i), _mm256_add_pd(one, _mm256_mul_pd(habit, yv)));
        const __m256d d = _mm256_add_pd(_mm256_sub_pd(gain, spend), _mm256_mul_pd(wage, _mm256_loadu_pd(labor + i)));
        _mm256_storeu_pd(drift + i, d);
        _mm256_storeu_pd(vol + i, _mm256_mul_pd(sigma, py));
    }
    for (; i < n; ++i) ratio_dynamics_one(c, y[i], p[i], kappa[i], labor[i], drift[i], vol[i]);
}

void assemble_generator_avx2(const double* drift, const double* half_var, const double* central,
                             const StencilWeights& w, double eta, double* lower, double* diag, double* upper,
                             std::size_t n) {
    const __m256d etav = _mm256_set1_pd(eta);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d d = _mm256_loadu_pd(drift + i);
        const __m256d hv = _mm256_loadu_pd(half_var + i);
        const __m256d diff_lo = _mm256_mul_pd(hv, _mm256_loadu_pd(w.w_lo + i));
        const __m256d diff_hi = _mm256_mul_pd(hv, _mm256_loadu_pd(w.w_hi + i));
        const __m256d up_lo = neg_v(_mm256_add_pd(diff_lo, _mm256_mul_pd(pos_v(neg_v(d)), _mm256_loadu_pd(w.inv_h_lo + i))));
        const __m256d up_hi = neg_v(_mm256_add_pd(diff_hi, _mm256_mul_pd(pos_v(d), _mm256_loadu_pd(w.inv_h_hi + i))));
        const __m256d ce_lo = neg_v(_mm256_sub_pd(diff_lo, _mm256_mul_pd(d, _mm256_loadu_pd(w.c_lo + i))));
        const __m256d ce_hi = neg_v(_mm256_add_pd(diff_hi, _mm256_mul_pd(d, _mm256_loadu_pd(w.c_hi + i))));
        const __m256d use_central = _mm256_cmp_pd(_mm256_loadu_pd(central + i), zero, _CMP_NEQ_UQ);
        const __m256d lo = _mm256_blendv_pd(up_lo, ce_lo, use_central);
        const __m256d up = _mm256_blendv_pd(up_hi, ce_hi, use_central);
        _mm256_storeu_pd(lower + i, lo);
        _mm256_storeu_pd(upper + i, up);
        _mm256_storeu_pd(diag + i, _mm256_sub_pd(_mm256_sub_pd(etav, lo), up));
    }
    for (; i < n; ++i) assemble_one(drift[i], half_var[i], central[i], w, i, eta, lower[i], diag[i], upper[i]);
}

void tridiagonal_residual_avx2(const double* lower, const double* diag, const double* upper, const double* v,
                               const double* rhs, double* out, std::size_t n) {
    if (n < 2 + kLanes) {
        for (std::size_t i = 0; i < n; ++i) out[i] = residual_at(lower, diag, upper, v, rhs, i, n);
        return;
    }
    out[0] = residual_at(lower, diag, upper, v, rhs, 0, n);
    std::size_t i = 1;
    for (; i + kLanes <= n - 1; i += kLanes) {
        const __m256d a = _mm256_mul_pd(_mm256_loadu_pd(lower + i), _mm256_loadu_pd(v + i - 1));
        const __m256d b = _mm256_mul_pd(_mm256_loadu_pd(diag + i), _mm256_loadu_pd(v + i));
        const __m256d c = _mm256_mul_pd(_mm256_loadu_pd(upper + i), _mm256_loadu_pd(v + i + 1));
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_add_pd(_mm256_add_pd(a, b), c), _mm256_loadu_pd(rhs + i)));
    }
    for (; i < n; ++i) out[i] = residual_at(lower, diag, upper, v, rhs, i, n);
}

void complementarity_avx2(const double* residual, const double* v, const double* g, double* out,
                          std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d gap = _mm256_sub_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_loadu_pd(residual + i), gap));
    }
    for (; i < n; ++i) out[i] = min2(residual[i], v[i] - g[i]);
}

void euler_update_avx2(double* y, const double* drift, const double* vol, const double* z, double dt,
                       double sqrt_dt, std::size_t n) {
    const __m256d dtv = _mm256_set1_pd(dt);
    const __m256d sq = _mm256_set1_pd(sqrt_dt);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d step = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(_mm256_loadu_pd(drift + i), dtv));
        const __m256d shock = _mm256_mul_pd(_mm256_loadu_pd(vol + i), _mm256_mul_pd(sq, _mm256_loadu_pd(z + i)));
        _mm256_storeu_pd(y + i, _mm256_add_pd(step, shock));
    }
    for (; i < n; ++i) y[i] = euler_one(y[i], drift[i], vol[i], z[i], dt, sqrt_dt);
}

void split_step_avx2(const RatioCoefficients& c, const double* p, const double* kappa, const double* labor,
                     const double* z, double dt, double sqrt_dt, double* exponent, double* shift, std::size_t n) {
    const __m256d growth = _mm256_set1_pd(c.growth);
    const __m256d excess = _mm256_set1_pd(c.excess);
    const __m256d habit = _mm256_set1_pd(c.habit);
    const __m256d wage = _mm256_set1_pd(c.wage);
    const __m256d sigma = _mm256_set1_pd(c.sigma);
    const __m256d dtv = _mm256_set1_pd(dt);
    const __m256d sq = _mm256_set1_pd(sqrt_dt);
    const __m256d half = _mm256_set1_pd(0.5);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d pv = _mm256_loadu_pd(p + i);
        const __m256d kv = _mm256_loadu_pd(kappa + i);
        const __m256d s = _mm256_mul_pd(sigma, pv);
        const __m256d rate = _mm256_sub_pd(_mm256_add_pd(growth, _mm256_mul_pd(pv, excess)), _mm256_mul_pd(kv, habit));
        const __m256d m = _mm256_mul_pd(_mm256_sub_pd(rate, _mm256_mul_pd(half, _mm256_mul_pd(s, s))), dtv);
        _mm256_storeu_pd(exponent + i, _mm256_add_pd(m, _mm256_mul_pd(s, _mm256_mul_pd(sq, _mm256_loadu_pd(z + i)))));
        _mm256_storeu_pd(shift + i, _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(wage, _mm256_loadu_pd(labor + i)), kv), dtv));
    }
    for (; i < n; ++i) split_step_one(c, p[i], kappa[i], labor[i], z[i], dt, sqrt_dt, exponent[i], shift[i]);
}

void accumulate_avx2(double* acc, const double* x, double weight, std::size_t n) {
    const __m256d w = _mm256_set1_pd(weight);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(w, _mm256_loadu_pd(x + i))));
    }
    for (; i < n; ++i) acc[i] = acc[i] + weight * x[i];
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{ratio_dynamics_avx2,  assemble_generator_avx2, tridiagonal_residual_avx2,
                                   complementarity_avx2, euler_update_avx2,    split_step_avx2,
                                   accumulate_avx2};
    return table;
}

}  // namespace annuity::kernels::detail
