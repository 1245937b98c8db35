#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace vri {

// Deterministic function of time. Constants integrate exactly.
class Curve {
 public:
  Curve() = default;

  static Curve constant(double v) {
    Curve c;
    c.value_ = v;
    return c;
  }
  static Curve function(std::function<double(double)> f) {
    Curve c;
    c.fn_ = std::move(f);
    return c;
  }

  double operator()(double t) const { return fn_ ? fn_(t) : value_; }

  double integral(double a, double b) const {
    if (!fn_) return value_ * (b - a);
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(fn_, a, b, 10, 1e-13);
  }

  bool is_constant() const { return !fn_; }
  std::optional<double> constant_value() const {
    if (fn_) return std::nullopt;
    return value_;
  }

 private:
  double value_ = 0.0;
  std::function<double(double)> fn_;
};

// Running integral of a curve over grid nodes: cum[i] = ∫_{t0}^{t_i} f.
inline std::vector<double> cumulative_integral(const Curve& f, const DiscreteGrid& grid) {
  std::vector<double> cum(grid.size(), 0.0);
  if (auto v = f.constant_value()) {
    for (std::size_t i = 0; i < cum.size(); ++i) cum[i] = *v * (grid.time(i) - grid.t0());
    return cum;
  }
  for (std::size_t i = 1; i < cum.size(); ++i)
    cum[i] = cum[i - 1] + f.integral(grid.time(i - 1), grid.time(i));
  return cum;
}

}  // namespace vri
