#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "resolvent.hpp"
#include "rng.hpp"

namespace vri {

struct MortalityParams {
  double lambda0 = 0.18;
  double b1 = 0.15;
  double a1 = 0.5;
  double sigma = 0.1;
  Curve baseline = Curve::constant(0.0);  // l(t)
  KernelSpec kernel = KernelSpec::fractional(1.0, 1.33);

  void validate() const {
    if (!(lambda0 > 0)) throw ParameterError("mortality.lambda0 must be positive");
    if (!(b1 > 0)) throw ParameterError("mortality.b1 must be positive");
    if (!(a1 > 0)) throw ParameterError("mortality.a1 must be positive");
    if (!(sigma >= 0)) throw ParameterError("mortality.sigma must be nonnegative");
  }
};

struct MortalityPath {
  DiscreteGrid grid;
  std::vector<double> lambda;      // max(raw, 0)
  std::vector<double> lambda_hat;  // l(t) + lambda
  std::vector<double> lambda_raw;  // untruncated scheme state
  std::vector<double> dW0;         // n_steps increments
};

// E[λ̂_s | F_t] for the Markov (constant kernel, c = 1) model.
inline double markov_conditional_mean(const MortalityParams& p, double lambda_t, double t, double s) {
  if (s < t) throw DomainError("conditional mean: s must not precede t");
  const double d = std::exp(-p.a1 * (s - t));
  return p.baseline(s) + lambda_t * d + p.b1 / p.a1 * (1.0 - d);
}

// The SVIE on a fixed grid, stepped in resolvent form:
//   λ_i = λ0 (1 - κF(t_i)) + b1 F(t_i) + Σ_{j<i} G_{i-j} σ √λ_j⁺ ΔW_j,
// with κ = a1, F = ∫E_B and G_k the cell average of E_B over [(k-1)dt, k dt].
// Conditional means then follow from the same weights without further discretization.
class MortalityModel {
 public:
  MortalityModel(MortalityParams p, DiscreteGrid grid)
      : MortalityModel(p, grid, resolvent_table(p.kernel, -p.a1, DiscreteGrid(0.0, grid.T() - grid.t0(), grid.n_steps()))) {}

  MortalityModel(MortalityParams p, DiscreteGrid grid, ResolventTable table)
      : p_(std::move(p)), grid_(grid), table_(std::move(table)) {
    p_.validate();
    if (!grid_.same_spacing(table_.grid()) || table_.grid().n_steps() < grid_.n_steps())
      throw ResolutionError("mortality: resolvent table does not cover the simulation grid");
    if (std::abs(table_.b_coeff() + p_.a1) > 1e-15) throw ParameterError("mortality: resolvent must use B = -a1");
    const std::size_t n = grid_.n_steps();
    det_.resize(n + 1);
    g_.assign(n + 1, 0.0);
    const auto& F = table_.integrated_e();
    for (std::size_t k = 0; k <= n; ++k) det_[k] = p_.lambda0 * (1.0 - p_.a1 * F[k]) + p_.b1 * F[k];
    for (std::size_t k = 1; k <= n; ++k) g_[k] = table_.cell_average(k);
  }

  const MortalityParams& params() const { return p_; }
  const DiscreteGrid& grid() const { return grid_; }
  const ResolventTable& resolvent() const { return table_; }
  double deterministic(std::size_t k) const { return det_.at(k); }
  double weight(std::size_t lag) const { return g_.at(lag); }

  MortalityPath simulate(std::uint64_t seed) const {
    Engine eng(seed);
    return simulate(eng);
  }

  MortalityPath simulate(Engine& eng) const {
    MortalityPath empty{grid_, {}, {}, {}, {}};
    return continue_path(empty, 0, det_, eng);
  }

  // Noise contribution of step j.
  double shock(const MortalityPath& path, std::size_t j) const {
    return p_.sigma * std::sqrt(std::max(path.lambda_raw[j], 0.0)) * path.dW0[j];
  }

  // h_k = E[λ_{t_k} | F_{t_m}] (l excluded) for k >= m; entries below m are left at zero.
  std::vector<double> forward_curve(const MortalityPath& path, std::size_t m) const {
    check_path(path, m);
    const std::size_t n = grid_.n_steps();
    std::vector<double> h(n + 1, 0.0);
    for (std::size_t k = m; k <= n; ++k) h[k] = det_[k];
    for (std::size_t j = 0; j < m; ++j) {
      const double xi = shock(path, j);
      if (xi == 0.0) continue;
      for (std::size_t k = m; k <= n; ++k) h[k] += g_[k - j] * xi;
    }
    return h;
  }

  // Keeps the prefix up to node m and draws fresh noise afterwards; `forward` is
  // forward_curve(prefix, m), shared by all continuations of the same prefix.
  MortalityPath continue_path(const MortalityPath& prefix, std::size_t m, const std::vector<double>& forward,
                              Engine& eng) const {
    const std::size_t n = grid_.n_steps();
    if (forward.size() != n + 1) throw ShapeError("mortality: forward curve has wrong length");
    MortalityPath out{grid_, std::vector<double>(n + 1), std::vector<double>(n + 1), std::vector<double>(n + 1),
                      std::vector<double>(n)};
    if (m > 0) {
      check_path(prefix, m);
      std::copy_n(prefix.lambda_raw.begin(), m, out.lambda_raw.begin());
      std::copy_n(prefix.dW0.begin(), m, out.dW0.begin());
    }
    std::vector<double> h(forward.begin(), forward.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sq = std::sqrt(grid_.dt());
    for (std::size_t i = m; i <= n; ++i) {
      out.lambda_raw[i] = h[i];
      if (i == n) break;
      out.dW0[i] = sq * normal(eng);
      const double xi = shock(out, i);
      if (xi == 0.0) continue;
      for (std::size_t k = i + 1; k <= n; ++k) h[k] += g_[k - i] * xi;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      out.lambda[i] = std::max(out.lambda_raw[i], 0.0);
      out.lambda_hat[i] = p_.baseline(grid_.time(i)) + out.lambda[i];
    }
    return out;
  }

  // E[λ̂_s | F_{t_m}] for any s >= t_m inside the grid.
  double conditional_mean(const MortalityPath& path, std::size_t m, double s) const {
    check_path(path, m);
    const double t = grid_.time(m);
    if (s < t - 1e-12 * std::max(1.0, std::abs(t))) throw DomainError("conditional mean: s must not precede t");
    if (s > grid_.T() + 1e-12 * std::max(1.0, std::abs(s))) throw ResolutionError("conditional mean: s beyond grid");
    if (grid_.is_node(s)) {
      const std::size_t k = grid_.index_of(s);
      double v = det_[k];
      for (std::size_t j = 0; j < m; ++j) v += g_[k - j] * shock(path, j);
      return p_.baseline(s) + v;
    }
    const double x = s - grid_.t0(), dt = grid_.dt();
    const double Fx = table_.integrated_e_at(x);
    double v = p_.lambda0 * (1.0 - p_.a1 * Fx) + p_.b1 * Fx;
    for (std::size_t j = 0; j < m; ++j) {
      const double xj = x - static_cast<double>(j) * dt;
      v += (table_.integrated_e_at(xj) - table_.integrated_e_at(xj - dt)) / dt * shock(path, j);
    }
    return p_.baseline(s) + v;
  }

 private:
  void check_path(const MortalityPath& path, std::size_t m) const {
    if (path.lambda_raw.size() != grid_.size() || path.dW0.size() != grid_.n_steps())
      throw ShapeError("mortality: path does not live on the model grid");
    if (m > grid_.n_steps()) throw DomainError("mortality: time index beyond grid");
  }

  MortalityParams p_;
  DiscreteGrid grid_;
  ResolventTable table_;
  std::vector<double> det_;
  std::vector<double> g_;
};

inline MortalityPath simulate_path(const MortalityParams& p, const DiscreteGrid& grid, std::uint64_t seed) {
  return MortalityModel(p, grid).simulate(seed);
}

// Conditional means E[λ_{t_k} | F_{t_m}] for all k >= m, updated in O(n) per step.
class ForwardCurveTracker {
 public:
  ForwardCurveTracker(const MortalityModel& model, const MortalityPath& path, std::size_t m)
      : model_(&model), path_(&path), m_(m), h_(model.forward_curve(path, m)) {}

  ForwardCurveTracker(const MortalityModel& model, const MortalityPath& path, std::size_t m, std::vector<double> h)
      : model_(&model), path_(&path), m_(m), h_(std::move(h)) {}

  std::size_t index() const { return m_; }

  void advance() {
    const std::size_t n = model_->grid().n_steps();
    if (m_ >= n) throw DomainError("forward curve: already at the horizon");
    const double xi = model_->shock(*path_, m_);
    for (std::size_t k = m_ + 1; k <= n; ++k) h_[k] += model_->weight(k - m_) * xi;
    ++m_;
  }

  double lambda_mean(std::size_t k) const {
    if (k < m_) throw DomainError("forward curve: target precedes conditioning time");
    return h_[k];
  }
  double mean_hat(std::size_t k) const { return model_->params().baseline(model_->grid().time(k)) + lambda_mean(k); }

 private:
  const MortalityModel* model_;
  const MortalityPath* path_;
  std::size_t m_;
  std::vector<double> h_;
};

// sup_k E[λ_{t_k}^q] by Monte Carlo.
inline double moment_bound_probe(const MortalityModel& model, double q, std::size_t n_paths, std::uint64_t seed) {
  if (!(q >= 2)) throw ParameterError("moment probe: q must be at least 2");
  if (n_paths == 0) throw ParameterError("moment probe: need at least one path");
  const std::size_t n = model.grid().size();
  const auto parts = batched(n_paths, std::vector<double>(n, 0.0), [&](std::size_t p, std::vector<double>& acc) {
    Engine eng = make_engine(seed, Stream::Mortality, p);
    const auto path = model.simulate(eng);
    for (std::size_t k = 0; k < n; ++k) acc[k] += std::pow(path.lambda[k], q);
  });
  double sup = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (const auto& a : parts) s += a[k];
    sup = std::max(sup, s / static_cast<double>(n_paths));
  }
  return sup;
}

}  // namespace vri
