#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mittag_leffler.hpp"

namespace vri {

enum class KernelFamily { Constant, Fractional, Exponential, Gamma };

inline const char* to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Constant: return "constant";
    case KernelFamily::Fractional: return "fractional";
    case KernelFamily::Exponential: return "exponential";
    case KernelFamily::Gamma: return "gamma";
  }
  return "?";
}

// Quadrature weights of one kernel cell [(k-1)dt, k dt] against a piecewise-linear
// integrand: `left` multiplies the value at the far end of the lag, `right` the near end.
struct CellWeights {
  double mass;
  double left;
  double right;
};

// All four families share K(t) = c e^{-decay t} t^{alpha-1} / Gamma(alpha).
class KernelSpec {
 public:
  static KernelSpec constant(double c = 1.0) { return KernelSpec(KernelFamily::Constant, c, 1.0, 0.0); }
  static KernelSpec fractional(double c, double alpha) {
    return KernelSpec(KernelFamily::Fractional, c, alpha, 0.0);
  }
  static KernelSpec exponential(double c, double decay) {
    return KernelSpec(KernelFamily::Exponential, c, 1.0, decay);
  }
  static KernelSpec gamma(double c, double alpha, double decay) {
    return KernelSpec(KernelFamily::Gamma, c, alpha, decay);
  }

  KernelFamily family() const { return family_; }
  double c() const { return c_; }
  double alpha() const { return alpha_; }
  double decay() const { return decay_; }

  // H = alpha - 1/2; alpha > 1 is the long-range-dependent range.
  double hurst() const {
    if (family_ != KernelFamily::Fractional && family_ != KernelFamily::Gamma)
      throw ParameterError("kernel: Hurst index defined only for fractional/gamma kernels");
    return alpha_ - 0.5;
  }

  double operator()(double t) const {
    if (!(t > 0)) throw DomainError("kernel: evaluation requires t > 0");
    return eval(t);
  }

  bool finite_at_zero() const { return alpha_ >= 1.0; }
  double value_at_zero() const {
    if (alpha_ > 1.0) return 0.0;
    if (alpha_ == 1.0) return c_;
    throw DomainError("kernel: singular at t = 0");
  }

  // ∫_0^x K
  double integral(double x) const {
    if (x < 0) throw DomainError("kernel: negative integration bound");
    if (x == 0) return 0.0;
    if (decay_ == 0.0) return c_ * std::pow(x, alpha_) / gamma1_;
    if (alpha_ == 1.0) return -c_ * std::expm1(-decay_ * x) / decay_;
    return c_ * std::pow(x, alpha_) * scaled_lower_gamma(alpha_, decay_ * x) / gamma0_;
  }

  // ∫_a^b K, accurate for narrow cells far from the origin.
  double integral(double a, double b) const {
    if (a < 0 || b < a) throw DomainError("kernel: invalid integration interval");
    if (a == 0) return integral(b);
    const double h = b - a;
    if (decay_ == 0.0) return c_ * std::pow(a, alpha_) * std::expm1(alpha_ * std::log1p(h / a)) / gamma1_;
    if (alpha_ == 1.0) return c_ * std::exp(-decay_ * a) * -std::expm1(-decay_ * h) / decay_;
    return gauss(a, b, [this](double u) { return eval(u); });
  }

  // ∫_0^x u K(u) du
  double first_moment(double x) const {
    if (x <= 0) return 0.0;
    if (decay_ == 0.0) return c_ * std::pow(x, alpha_ + 1.0) / ((alpha_ + 1.0) * gamma0_);
    return c_ * std::pow(x, alpha_ + 1.0) * scaled_lower_gamma(alpha_ + 1.0, decay_ * x) / gamma0_;
  }

  // ∫_0^h K^2
  double square_integral(double h) const {
    if (h <= 0) return 0.0;
    const double p = 2.0 * alpha_ - 1.0;
    return c_ * c_ * std::pow(h, p) * scaled_lower_gamma(p, 2.0 * decay_ * h) / (gamma0_ * gamma0_);
  }

  CellWeights cell(std::size_t k, double dt) const {
    if (k == 0) throw DomainError("kernel: cell index starts at 1");
    if (k == 1) {
      const double mass = integral(dt);
      const double left = first_moment(dt) / dt;
      return {mass, left, mass - left};
    }
    const double a = static_cast<double>(k - 1) * dt;
    const double mass = integral(a, a + dt);
    const double left = gauss(0.0, dt, [&](double v) { return eval(a + v) * v; }) / dt;
    const double right = gauss(0.0, dt, [&](double v) { return eval(a + v) * (dt - v); }) / dt;
    const double scale = mass / (left + right);
    return {mass, left * scale, right * scale};
  }

 private:
  KernelSpec(KernelFamily f, double c, double alpha, double decay)
      : family_(f), c_(c), alpha_(alpha), decay_(decay) {
    if (!(c > 0) || !std::isfinite(c)) throw ParameterError("kernel: c must be positive");
    if (!(alpha > 0.5 && alpha <= 1.5))
      throw ParameterError("kernel: alpha must lie in (1/2, 3/2] for square integrability");
    if (!(decay >= 0) || !std::isfinite(decay)) throw ParameterError("kernel: decay must be nonnegative");
    gamma0_ = std::tgamma(alpha_);
    gamma1_ = std::tgamma(alpha_ + 1.0);
  }

  double eval(double t) const {
    double v = c_ / gamma0_;
    if (alpha_ != 1.0) v *= std::pow(t, alpha_ - 1.0);
    if (decay_ != 0.0) v *= std::exp(-decay_ * t);
    return v;
  }

  template <class F>
  static double gauss(double a, double b, F&& f) {
    return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
  }

  KernelFamily family_;
  double c_;
  double alpha_;
  double decay_;
  double gamma0_{};
  double gamma1_{};
};

struct AssumptionOneReport {
  bool positive = false;
  bool completely_monotone = false;
  bool holder_bound = false;
  bool holds = false;
  double k = 0.0;    // smallest constant making the bound hold at every sampled h
  double chi = 0.0;  // fitted exponent
  std::vector<double> h;
  std::vector<double> bound;
  std::string diagnostic;
};

// Positivity and complete monotonicity are decided analytically; the Hölder-type
// bound ∫_0^h K^2 + ∫_0^T (K(t+h)-K(t))^2 dt <= k h^chi is fitted over h = 2^-j.
inline AssumptionOneReport check_assumption_1(const KernelSpec& K, double horizon = 3.0) {
  AssumptionOneReport rep;
  rep.positive = K.c() > 0;
  // t^{alpha-1} is increasing for alpha > 1, so only alpha <= 1 gives a CM kernel.
  rep.completely_monotone = K.alpha() <= 1.0;

  boost::math::quadrature::tanh_sinh<double> ts;
  const auto diff2 = [&](double h) {
    if (K.alpha() == 1.0 && K.decay() == 0.0) return 0.0;
    auto f = [&](double t) {
      const double d = K(t + h) - K(t);
      return d * d;
    };
    double err = 0.0;
    return ts.integrate(f, 0.0, h, 1e-11, &err) + ts.integrate(f, h, horizon, 1e-11, &err);
  };

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 4; j <= 12; ++j) {
    const double h = std::ldexp(1.0, -j);
    const double b = K.square_integral(h) + diff2(h);
    rep.h.push_back(h);
    rep.bound.push_back(b);
    const double x = std::log(h), y = std::log(b);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double n = static_cast<double>(rep.h.size());
  rep.chi = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  for (std::size_t i = 0; i < rep.h.size(); ++i)
    rep.k = std::max(rep.k, rep.bound[i] / std::pow(rep.h[i], rep.chi));
  rep.holder_bound = std::isfinite(rep.chi) && rep.chi > 0 && std::isfinite(rep.k);
  rep.holds = rep.positive && rep.completely_monotone && rep.holder_bound;

  std::ostringstream os;
  os << to_string(K.family()) << " kernel: positive=" << (rep.positive ? "yes" : "no")
     << " completely_monotone=" << (rep.completely_monotone ? "yes" : "no");
  if (!rep.completely_monotone) os << " (alpha=" << K.alpha() << " > 1: K is increasing near 0)";
  os << " holder: k=" << rep.k << " chi=" << rep.chi;
  rep.diagnostic = os.str();
  return rep;
}

}  // namespace vri
