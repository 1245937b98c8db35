#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace vri {

// Uniform grid t_i = t0 + i*dt, i = 0..n_steps.
class DiscreteGrid {
 public:
  DiscreteGrid(double t0, double T, std::size_t n_steps) : t0_(t0), n_(n_steps) {
    if (n_steps == 0) throw ParameterError("grid: n_steps must be positive");
    if (!(T > t0)) throw ParameterError("grid: T must exceed t0");
    dt_ = (T - t0) / static_cast<double>(n_steps);
  }

  static DiscreteGrid with_step(double t0, double dt, std::size_t n_steps) {
    if (!(dt > 0)) throw ParameterError("grid: dt must be positive");
    DiscreteGrid g(t0, t0 + dt * static_cast<double>(n_steps), n_steps);
    g.dt_ = dt;
    return g;
  }

  double t0() const { return t0_; }
  double T() const { return time(n_); }
  double dt() const { return dt_; }
  std::size_t n_steps() const { return n_; }
  std::size_t size() const { return n_ + 1; }
  double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }

  bool is_node(double t) const {
    const double x = (t - t0_) / dt_;
    const double k = std::round(x);
    return k >= 0 && k <= static_cast<double>(n_) && std::abs(x - k) <= 1e-9 * std::max(1.0, std::abs(x));
  }

  std::size_t index_of(double t) const {
    if (!is_node(t)) throw DomainError("grid: t = " + std::to_string(t) + " is not a grid node");
    return static_cast<std::size_t>(std::llround((t - t0_) / dt_));
  }

  // Largest i with t_i <= t (clamped to [0, n]).
  std::size_t floor_index(double t) const {
    double x = (t - t0_) / dt_;
    if (std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::abs(x))) x = std::round(x);
    if (x <= 0) return 0;
    const auto k = static_cast<std::size_t>(std::floor(x));
    return k > n_ ? n_ : k;
  }

  // Same spacing, starting at node `from`.
  DiscreteGrid tail(std::size_t from) const {
    if (from >= n_) throw DomainError("grid: tail must keep at least one step");
    return with_step(time(from), dt_, n_ - from);
  }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = time(i);
    return out;
  }

  bool same_spacing(const DiscreteGrid& o) const {
    return std::abs(dt_ - o.dt_) <= 1e-12 * dt_;
  }

 private:
  double t0_;
  double dt_{};
  std::size_t n_;
};

}  // namespace vri
