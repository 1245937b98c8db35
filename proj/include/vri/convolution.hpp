#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "kernel.hpp"

namespace vri {

enum class Quadrature {
  LeftPoint,         // series frozen at the left end of each cell
  ProductTrapezoid,  // series linear on each cell, kernel integrated exactly
};

// Per-lag weights, index k = 1..lags (slot 0 unused).
struct ConvolutionWeights {
  double dt = 0.0;
  std::vector<double> mass{0.0};
  std::vector<double> left{0.0};
  std::vector<double> right{0.0};
  std::size_t lags() const { return mass.size() - 1; }
};

inline ConvolutionWeights kernel_weights(const KernelSpec& K, double dt, std::size_t lags) {
  if (!(dt > 0)) throw ParameterError("kernel_weights: dt must be positive");
  ConvolutionWeights w;
  w.dt = dt;
  w.mass.resize(lags + 1, 0.0);
  w.left.resize(lags + 1, 0.0);
  w.right.resize(lags + 1, 0.0);
  for (std::size_t k = 1; k <= lags; ++k) {
    const CellWeights c = K.cell(k, dt);
    w.mass[k] = c.mass;
    w.left[k] = c.left;
    w.right[k] = c.right;
  }
  return w;
}

// out_i ≈ ∫_0^{t_i} K(t_i - s) x(s) ds on the grid.
inline std::vector<double> convolve(const ConvolutionWeights& w, std::span<const double> series,
                                    const DiscreteGrid& grid, Quadrature q = Quadrature::LeftPoint) {
  if (series.empty()) return {};
  if (series.size() != grid.size()) throw ShapeError("convolve: series length does not match grid");
  if (std::abs(w.dt - grid.dt()) > 1e-12 * grid.dt()) throw ShapeError("convolve: weight spacing differs from grid");
  if (w.lags() < grid.n_steps()) throw ShapeError("convolve: weights cover too few lags");

  std::vector<double> out(series.size(), 0.0);
  for (std::size_t i = 1; i < series.size(); ++i) {
    double acc = 0.0;
    if (q == Quadrature::LeftPoint) {
      for (std::size_t k = 1; k <= i; ++k) acc += w.mass[k] * series[i - k];
    } else {
      for (std::size_t k = 1; k <= i; ++k) acc += w.left[k] * series[i - k] + w.right[k] * series[i - k + 1];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace vri
