#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <string>

#include "errors.hpp"

namespace vri {

struct SeriesBudget {
  std::size_t max_terms = 500;
  double abs_tol = 1e-12;
};

namespace detail {

inline double ml_term(double alpha, double beta, double z, std::size_t n) {
  const double x = alpha * static_cast<double>(n) + beta;
  const double az = std::abs(z);
  double mag = 0.0;
  if (x < 170.0) mag = std::pow(az, static_cast<double>(n)) / std::tgamma(x);
  if (x >= 170.0 || !std::isfinite(mag))
    mag = std::exp(static_cast<double>(n) * std::log(az) - std::lgamma(x));
  return (z < 0 && (n & 1U)) ? -mag : mag;
}

}  // namespace detail

// E_{alpha,beta}(z) = sum_n z^n / Gamma(alpha n + beta), compensated summation.
inline double mittag_leffler(double alpha, double beta, double z, SeriesBudget budget = {}) {
  if (!(alpha > 0) || !(beta > 0))
    throw ParameterError("mittag_leffler: alpha and beta must be positive");
  if (!std::isfinite(z)) throw DomainError("mittag_leffler: non-finite argument");
  if (z == 0.0) return 1.0 / std::tgamma(beta);

  double sum = 0.0, comp = 0.0, prev = INFINITY;
  for (std::size_t n = 0; n < budget.max_terms; ++n) {
    const double term = detail::ml_term(alpha, beta, z, n);
    const double t = sum + term;
    comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
    const double mag = std::abs(term);
    if (mag < budget.abs_tol && mag <= prev) return sum + comp;
    prev = mag;
  }
  throw ConvergenceError("mittag_leffler: series did not reach tolerance within " +
                         std::to_string(budget.max_terms) + " terms (z = " + std::to_string(z) + ")");
}

// y^{-a} * lower incomplete gamma(a, y); equals 1/a at y = 0.
inline double scaled_lower_gamma(double a, double y) {
  if (!(a > 0)) throw ParameterError("scaled_lower_gamma: a must be positive");
  if (y < 0) throw DomainError("scaled_lower_gamma: y must be nonnegative");
  if (y == 0.0) return 1.0 / a;
  if (y < a + 40.0) {
    double term = 1.0 / a, sum = term;
    for (int k = 1; k < 10000; ++k) {
      term *= y / (a + k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::exp(-y) * sum;
  }
  return boost::math::tgamma_lower(a, y) * std::pow(y, -a);
}

}  // namespace vri
