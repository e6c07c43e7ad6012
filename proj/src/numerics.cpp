#include "annuity/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "annuity/error.hpp"

namespace annuity::numerics {

namespace {

double checked_eval(const Function& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        throw InvalidIntegrand("non-finite function value at x=" + std::to_string(x));
    }
    return v;
}

unsigned depth_for(int max_subdivisions) {
    unsigned depth = 0;
    while ((1 << depth) < max_subdivisions && depth < 30) ++depth;
    return depth;
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw DomainError("quadrature tolerances must be positive");
    if (!(decay_rate > 0.0)) throw DomainError("quadrature decay rate must be positive");
    if (max_subdivisions < 1) throw DomainError("quadrature needs at least one subdivision");
}

double QuadratureSpec::truncation_point() const {
    // Tail mass of exp(-decay_rate t) beyond T is abs_tol / 10 per unit amplitude.
    return std::log(10.0 / (abs_tol * decay_rate)) / decay_rate;
}

double integrate(const Function& f, double a, double b, const QuadratureSpec& spec) {
    spec.validate();
    if (!(b >= a)) throw DomainError("integration interval is reversed");
    if (a == b) return 0.0;
    double error = 0.0;
    double l1 = 0.0;
    auto g = [&f](double x) { return checked_eval(f, x); };
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        g, a, b, depth_for(spec.max_subdivisions), spec.rel_tol, &error, &l1);
    const double budget = std::max(spec.abs_tol, spec.rel_tol * std::abs(value));
    // Boost reports the raw Kronrod-Gauss difference, which is pessimistic by orders of
    // magnitude for smooth integrands; allow the conventional safety factor.
    if (!(error <= 10.0 * budget) && !(error <= spec.rel_tol * l1)) {
        throw NumericalFailure("quadrature error estimate " + std::to_string(error) +
                               " exceeds tolerance after subdivision limit");
    }
    return value;
}

double integrate_semi_infinite(const Function& f, const QuadratureSpec& spec) {
    spec.validate();
    return integrate(f, 0.0, spec.truncation_point(), spec);
}

double find_root_bracketed(const Function& g, double lo, double hi, double tol, int max_iter) {
    if (!(lo <= hi)) throw DomainError("root bracket is reversed");
    if (!(tol > 0.0)) throw DomainError("root tolerance must be positive");
    const double glo = checked_eval(g, lo);
    const double ghi = checked_eval(g, hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if ((glo > 0.0) == (ghi > 0.0)) {
        throw BracketError("function does not change sign on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    }
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    auto within = [tol](double a, double b) { return std::abs(b - a) <= tol; };
    auto gg = [&g](double x) { return checked_eval(g, x); };
    const auto bracket = boost::math::tools::toms748_solve(gg, lo, hi, glo, ghi, within, iters);
    const double a = bracket.first;
    const double b = bracket.second;
    if (!within(a, b)) {
        throw NumericalFailure("root finder exceeded " + std::to_string(max_iter) + " iterations");
    }
    const double ga = std::abs(g(a));
    const double gb = std::abs(g(b));
    return ga <= gb ? a : b;
}

double default_fd_step(double x, int order) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double scale = std::max(1.0, std::abs(x));
    return (order == 2 ? std::pow(eps, 0.25) : std::cbrt(eps)) * scale;
}

double derivative_fd(const Function& f, double x, int order, double h) {
    if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
    if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
    const double fp = checked_eval(f, x + h);
    const double fm = checked_eval(f, x - h);
    if (order == 1) return (fp - fm) / (2.0 * h);
    const double f0 = checked_eval(f, x);
    return (fp - 2.0 * f0 + fm) / (h * h);
}

double derivative_fd(const Function& f, double x, int order) {
    return derivative_fd(f, x, order, default_fd_step(x, order));
}

}  // namespace annuity::numerics
