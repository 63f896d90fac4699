#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vje/error.hpp"
#include "vje/numerics.hpp"

namespace vje {

namespace {

using GaussKronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

QuadratureResult finite_range(const Integrand& f, double lo, double hi, double tol, unsigned max_depth) {
  double error = 0.0;
  const double value = GaussKronrod::integrate(f, lo, hi, max_depth, tol, &error);
  return {value, error};
}

// Integral of f over [lo, +inf) through t = u / (1 - u), rho = lo + expm1(t).
// A polynomial tail rho^(-1-nu) becomes exp(-nu t), which the rational map alone
// would leave as an endpoint singularity for nu < 1.
QuadratureResult upper_tail(const Integrand& f, double lo, double tol, unsigned max_depth) {
  auto mapped = [&](double u) {
    const double w = 1.0 - u;
    if (w <= 0.0) return 0.0;
    const double t = u / w;
    const double rho = lo + std::expm1(t);
    if (!std::isfinite(rho)) return 0.0;
    const double v = f(rho) * std::exp(t) / (w * w);
    return std::isfinite(v) ? v : 0.0;
  };
  return finite_range(mapped, 0.0, 1.0, tol, max_depth);
}

QuadratureResult lower_tail(const Integrand& f, double hi, double tol, unsigned max_depth) {
  return upper_tail([&](double x) { return f(-x); }, -hi, tol, max_depth);
}

}  // namespace

QuadratureResult quadrature_1d(const Integrand& f, double lo, double hi, double tol, unsigned max_depth) {
  if (!(tol > 0.0)) throw DomainError("quadrature_1d: tol must be positive");
  if (std::isnan(lo) || std::isnan(hi)) throw DomainError("quadrature_1d: NaN bound");
  if (lo == hi) return {};
  if (lo > hi) {
    auto r = quadrature_1d(f, hi, lo, tol, max_depth);
    return {-r.value, r.error};
  }

  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  QuadratureResult r;
  if (!lo_inf && !hi_inf) {
    r = finite_range(f, lo, hi, tol, max_depth);
  } else if (!lo_inf) {
    r = upper_tail(f, lo, tol, max_depth);
  } else if (!hi_inf) {
    r = lower_tail(f, hi, tol, max_depth);
  } else {
    const auto right = upper_tail(f, 0.0, tol / 2, max_depth);
    const auto left = lower_tail(f, 0.0, tol / 2, max_depth);
    r = {left.value + right.value, left.error + right.error};
  }

  if (!std::isfinite(r.value) || r.error > tol) {
    throw ConvergenceError("quadrature_1d: no convergence (error estimate " + std::to_string(r.error) +
                               " > tol " + std::to_string(tol) + ")",
                           r.value, r.error);
  }
  return r;
}

QuadratureResult quadrature_2d(const std::function<double(double, double)>& f, double x_lo, double x_hi,
                               double y_lo, double y_hi, double tol) {
  // Inner integrals run an order of magnitude tighter so their error does not
  // dominate the outer estimate.
  const double inner_tol = tol * 1e-2;
  double inner_error = 0.0;
  auto outer = [&](double x) {
    auto r = quadrature_1d([&](double y) { return f(x, y); }, y_lo, y_hi, inner_tol);
    inner_error = std::max(inner_error, r.error);
    return r.value;
  };
  auto r = quadrature_1d(outer, x_lo, x_hi, tol);
  return {r.value, r.error + inner_error};
}

}  // namespace vje
