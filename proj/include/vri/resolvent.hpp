#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "convolution.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "mittag_leffler.hpp"

namespace vri {

// With B = b_coeff and kappa = -B, R_B is the resolvent of kappa*K and E_B = R_B / kappa,
// i.e. E_B solves E = K - kappa K*E. F(x) = ∫_0^x E_B.

inline double resolvent_e_closed_form(const KernelSpec& K, double b_coeff, double t) {
  if (!(t > 0)) throw DomainError("resolvent: requires t > 0");
  const double kappa = -b_coeff, c = K.c(), a = K.alpha(), lam = K.decay();
  switch (K.family()) {
    case KernelFamily::Constant: return c * std::exp(-kappa * c * t);
    case KernelFamily::Exponential: return c * std::exp(-(lam + kappa * c) * t);
    case KernelFamily::Fractional:
    case KernelFamily::Gamma: {
      const double ta = std::pow(t, a);
      double v = c * ta / t * mittag_leffler(a, a, -kappa * c * ta);
      if (lam != 0.0) v *= std::exp(-lam * t);
      return v;
    }
  }
  return 0.0;
}

inline double integrated_e_closed_form(const KernelSpec& K, double b_coeff, double x) {
  if (x < 0) throw DomainError("resolvent: negative integration bound");
  if (x == 0) return 0.0;
  const double kappa = -b_coeff, c = K.c(), a = K.alpha(), lam = K.decay();
  switch (K.family()) {
    case KernelFamily::Constant:
      return kappa == 0.0 ? c * x : -std::expm1(-kappa * c * x) / kappa;
    case KernelFamily::Exponential: {
      const double rho = lam + kappa * c;
      return rho == 0.0 ? c * x : -c * std::expm1(-rho * x) / rho;
    }
    case KernelFamily::Fractional: {
      const double xa = std::pow(x, a);
      return c * xa * mittag_leffler(a, a + 1.0, -kappa * c * xa);
    }
    case KernelFamily::Gamma: {
      // c Σ_n (-kappa c)^n x^{a(n+1)} g(a(n+1), lam x) / Gamma(a(n+1))
      const double z = -kappa * c, y = lam * x;
      double sum = 0.0, comp = 0.0, prev = INFINITY;
      for (int n = 0; n < 500; ++n) {
        const double an = a * (n + 1);
        const double mag = std::exp(n * std::log(std::abs(z) + 1e-300) + an * std::log(x) - std::lgamma(an)) *
                           scaled_lower_gamma(an, y);
        const double term = (n == 0) ? std::pow(x, a) * scaled_lower_gamma(a, y) / std::tgamma(a)
                                     : ((z < 0 && (n & 1)) ? -mag : mag);
        const double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
        if (z == 0.0) break;
        if (std::abs(term) < 1e-16 * (std::abs(sum) + 1e-300) && std::abs(term) <= prev) return c * (sum + comp);
        prev = std::abs(term);
      }
      if (z != 0.0) throw ConvergenceError("resolvent: gamma-kernel series did not converge");
      return c * (sum + comp);
    }
  }
  return 0.0;
}

enum class ResolventSource { ClosedForm, Numeric };

struct ResolventValue {
  double value;
  bool numeric_fallback;
};

class ResolventTable {
 public:
  const KernelSpec& kernel() const { return kernel_; }
  double b_coeff() const { return b_; }
  double scale() const { return -b_; }
  const DiscreteGrid& grid() const { return grid_; }
  ResolventSource source() const { return source_; }
  bool fallback() const { return fallback_; }

  // Node values; E_B(0) is +inf for kernels singular at the origin.
  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& e() const { return e_; }
  const std::vector<double>& integrated_e() const { return f_; }

  // (F(t_k) - F(t_{k-1})) / dt: the cell average of E_B, k >= 1.
  double cell_average(std::size_t k) const { return (f_[k] - f_[k - 1]) / grid_.dt(); }

  double integrated_e_at(double x) const {
    if (x < 0) throw DomainError("resolvent: negative lag");
    if (grid_.is_node(x)) return f_[grid_.index_of(x)];
    if (source_ == ResolventSource::ClosedForm) return integrated_e_closed_form(kernel_, b_, x);
    if (x > grid_.T()) throw ResolutionError("resolvent: lag beyond tabulated range");
    const std::size_t i = grid_.floor_index(x);
    const double w = (x - grid_.time(i)) / grid_.dt();
    return (1.0 - w) * f_[i] + w * f_[std::min(i + 1, grid_.n_steps())];
  }

  // Largest residual of the discrete system the table was solved from (numeric tables).
  double solve_residual() const { return residual_; }

 private:
  ResolventTable(const KernelSpec& K, double b, const DiscreteGrid& g)
      : kernel_(K), b_(b), grid_(g) {}

  friend ResolventTable resolvent_numeric(const KernelSpec&, double, const DiscreteGrid&);
  friend ResolventTable resolvent_table(const KernelSpec&, double, const DiscreteGrid&);

  KernelSpec kernel_;
  double b_;
  DiscreteGrid grid_;
  ResolventSource source_ = ResolventSource::ClosedForm;
  bool fallback_ = false;
  std::vector<double> r_, e_, f_;
  double residual_ = 0.0;
};

// Forward substitution with product-trapezoid weights for F = I_K - kappa K*F and,
// when K(0) is finite, E = K - kappa K*E.
inline ResolventTable resolvent_numeric(const KernelSpec& K, double b_coeff, const DiscreteGrid& grid) {
  if (grid.t0() != 0.0) throw DomainError("resolvent: lag grid must start at 0");
  const std::size_t n = grid.n_steps();
  const double dt = grid.dt(), kappa = -b_coeff;
  const ConvolutionWeights w = kernel_weights(K, dt, n);
  const double diag = 1.0 + kappa * w.right[1];
  if (!(std::abs(diag) > 1e-14)) throw NumericalError("resolvent: singular triangular system");

  ResolventTable tab(K, b_coeff, grid);
  tab.source_ = ResolventSource::Numeric;

  // y_i (1 + kappa right_1) = rhs_i - kappa * (known part of (K*y)_i)
  auto solve = [&](std::vector<double> rhs, double y0) {
    std::vector<double> y(n + 1, 0.0);
    y[0] = y0;
    auto history = [&](std::size_t i) {
      double acc = w.left[1] * y[i - 1];
      for (std::size_t k = 2; k <= i; ++k) acc += w.left[k] * y[i - k] + w.right[k] * y[i - k + 1];
      return acc;
    };
    for (std::size_t i = 1; i <= n; ++i) y[i] = (rhs[i] - kappa * history(i)) / diag;
    for (std::size_t i = 1; i <= n; ++i)
      tab.residual_ = std::max(tab.residual_, std::abs(y[i] + kappa * (history(i) + w.right[1] * y[i]) - rhs[i]));
    return y;
  };

  // F is smooth at the origin for every family, so it is always solved in integrated form.
  std::vector<double> rhs(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) rhs[i] = K.integral(grid.time(i));
  tab.f_ = solve(rhs, 0.0);

  if (K.finite_at_zero()) {
    rhs[0] = K.value_at_zero();
    for (std::size_t i = 1; i <= n; ++i) rhs[i] = K(grid.time(i));
    tab.e_ = solve(rhs, rhs[0]);
  } else {
    const auto& y = tab.f_;
    tab.e_.assign(n + 1, 0.0);
    tab.e_[0] = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) tab.e_[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
    tab.e_[n] = n >= 2 ? (3.0 * y[n] - 4.0 * y[n - 1] + y[n - 2]) / (2.0 * dt) : y[n] / dt;
  }
  tab.r_.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) tab.r_[i] = kappa == 0.0 ? 0.0 : kappa * tab.e_[i];
  return tab;
}

// Closed-form table; falls back to the numerical solve (flagged) if a series fails.
inline ResolventTable resolvent_table(const KernelSpec& K, double b_coeff, const DiscreteGrid& grid) {
  if (grid.t0() != 0.0) throw DomainError("resolvent: lag grid must start at 0");
  const std::size_t n = grid.n_steps();
  const double kappa = -b_coeff;
  try {
    ResolventTable tab(K, b_coeff, grid);
    tab.e_.resize(n + 1);
    tab.f_.resize(n + 1);
    tab.r_.resize(n + 1);
    tab.e_[0] = K.finite_at_zero() ? K.value_at_zero() : std::numeric_limits<double>::infinity();
    tab.f_[0] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      tab.e_[i] = resolvent_e_closed_form(K, b_coeff, grid.time(i));
      tab.f_[i] = integrated_e_closed_form(K, b_coeff, grid.time(i));
    }
    for (std::size_t i = 0; i <= n; ++i) tab.r_[i] = kappa == 0.0 ? 0.0 : kappa * tab.e_[i];
    return tab;
  } catch (const ConvergenceError&) {
    ResolventTable tab = resolvent_numeric(K, b_coeff, grid);
    tab.fallback_ = true;
    return tab;
  }
}

inline ResolventValue resolvent_closed_form(const KernelSpec& K, double b_coeff, double t) {
  const double kappa = -b_coeff;
  try {
    return {kappa * resolvent_e_closed_form(K, b_coeff, t), false};
  } catch (const ConvergenceError&) {
    const std::size_t n = std::max<std::size_t>(512, static_cast<std::size_t>(std::ceil(t / 1e-3)));
    const ResolventTable tab = resolvent_numeric(K, b_coeff, DiscreteGrid(0.0, t, n));
    return {tab.r().back(), true};
  }
}

}  // namespace vri
