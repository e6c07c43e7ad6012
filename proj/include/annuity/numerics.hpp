#pragma once

#include <functional>

namespace annuity::numerics {

using Function = std::function<double(double)>;

struct QuadratureSpec {
    double rel_tol = 1e-12;
    double abs_tol = 1e-13;
    // Exponential decay rate of the integrand tail; sets the truncation point.
    double decay_rate = 0.01;
    int max_subdivisions = 4096;

    void validate() const;
    double truncation_point() const;
};

// Integral over [0, inf) of an integrand decaying at least like exp(-decay_rate t).
double integrate_semi_infinite(const Function& f, const QuadratureSpec& spec);

// Adaptive Gauss-Kronrod on a finite interval, same tolerance semantics.
double integrate(const Function& f, double a, double b, const QuadratureSpec& spec);

double find_root_bracketed(const Function& g, double lo, double hi, double tol,
                           int max_iter = 200);

// Central difference of order 1 or 2 with O(h^2) error.
double derivative_fd(const Function& f, double x, int order, double h);
double derivative_fd(const Function& f, double x, int order);
double default_fd_step(double x, int order);

}  // namespace annuity::numerics
