#pragma once

#include "annuity/kernels.hpp"

namespace annuity::kernels::detail {

struct KernelTable {
    void (*ratio_dynamics)(const RatioCoefficients&, const double*, const double*, const double*,
                           const double*, double*, double*, std::size_t);
    void (*assemble_generator)(const double*, const double*, const double*, const StencilWeights&, double,
                               double*, double*, double*, std::size_t);
    void (*tridiagonal_residual)(const double*, const double*, const double*, const double*,
                                 const double*, double*, std::size_t);
    void (*complementarity)(const double*, const double*, const double*, double*, std::size_t);
    void (*euler_update)(double*, const double*, const double*, const double*, double, double,
                         std::size_t);
    void (*split_step)(const RatioCoefficients&, const double*, const double*, const double*, const double*, double,
                       double, double*, double*, std::size_t);
    void (*accumulate)(double*, const double*, double, std::size_t);
};

const KernelTable& scalar_table();
#ifdef ANNUITY_HAVE_AVX2
const KernelTable& avx2_table();
#endif

}  // namespace annuity::kernels::detail
