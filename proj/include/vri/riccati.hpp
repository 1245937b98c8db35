#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "convolution.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "mortality.hpp"

namespace vri {

struct RiccatiSolution {
  DiscreteGrid grid;
  std::vector<double> psi;
  double c0;
  double residual;  // max |ψ - (c0 - a1ψ + ½σ²ψ²)*K| in the discrete convolution
};

// a1^2 - 2 C sigma^2 > 0 guarantees a global solution for the constant kernel.
inline bool riccati_global_solution_guaranteed(double a1, double sigma, double C) {
  return a1 * a1 - 2.0 * C * sigma * sigma > 0.0;
}

// ψ = (c0 - a1ψ + ½σ²ψ²)*K marched with product-trapezoid weights; the implicit
// node value is the stable root of the local quadratic.
inline RiccatiSolution solve_riccati(const MortalityParams& p, const DiscreteGrid& grid, double c0) {
  p.validate();
  if (grid.t0() != 0.0) throw DomainError("riccati: grid must start at 0");
  const std::size_t n = grid.n_steps();
  const auto w = kernel_weights(p.kernel, grid.dt(), n);
  const double half_s2 = 0.5 * p.sigma * p.sigma;
  auto drift = [&](double x) { return c0 - p.a1 * x + half_s2 * x * x; };

  std::vector<double> psi(n + 1, 0.0), f(n + 1, 0.0);
  f[0] = drift(0.0);
  const double beta = w.right[1];
  const double qa = half_s2 * beta, qb = 1.0 + p.a1 * beta;
  auto known = [&](std::size_t i) {
    double acc = w.left[1] * f[i - 1];
    for (std::size_t k = 2; k <= i; ++k) acc += w.left[k] * f[i - k] + w.right[k] * f[i - k + 1];
    return acc;
  };
  for (std::size_t i = 1; i <= n; ++i) {
    const double C = known(i) + beta * c0;
    const double disc = qb * qb - 4.0 * qa * C;
    if (disc < 0.0 || !std::isfinite(C))
      throw NoGlobalSolutionError("riccati: solution blows up before t = " + std::to_string(grid.time(i)),
                                  grid.time(i));
    psi[i] = 2.0 * C / (qb + std::sqrt(disc));
    if (std::abs(psi[i]) > 1e6)
      throw NoGlobalSolutionError("riccati: solution blows up near t = " + std::to_string(grid.time(i)),
                                  grid.time(i));
    f[i] = drift(psi[i]);
  }
  double res = 0.0;
  for (std::size_t i = 1; i <= n; ++i) res = std::max(res, std::abs(psi[i] - known(i) - beta * f[i]));
  return {grid, std::move(psi), c0, res};
}

// E[exp(c0 ∫_0^T λ_s ds) | F_{t_m}] on the model grid (origin = process start):
//   Y = c0 ∫_0^T E[λ_s|F_t] ds + ½σ² ∫_t^T ψ(T-s)² E[λ_s|F_t] ds.
inline double exp_functional(const MortalityModel& model, double c0, const MortalityPath& path, std::size_t m) {
  if (c0 == 0.0) return 1.0;
  const auto& g = model.grid();
  const std::size_t n = g.n_steps();
  const auto sol = solve_riccati(model.params(), DiscreteGrid(0.0, g.T() - g.t0(), n), c0);
  const auto h = model.forward_curve(path, m);
  std::vector<double> mean(n + 1);
  for (std::size_t k = 0; k <= n; ++k) mean[k] = k < m ? path.lambda[k] : h[k];

  const double dt = g.dt(), half_s2 = 0.5 * model.params().sigma * model.params().sigma;
  auto trap = [&](std::size_t lo, auto&& f) {
    double s = 0.0;
    for (std::size_t k = lo; k < n; ++k) s += 0.5 * (f(k) + f(k + 1));
    return s * dt;
  };
  const double y = c0 * trap(0, [&](std::size_t k) { return mean[k]; }) +
                   half_s2 * trap(m, [&](std::size_t k) { return sol.psi[n - k] * sol.psi[n - k] * mean[k]; });
  return std::exp(y);
}

}  // namespace vri
