#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "mortality.hpp"
#include "rng.hpp"
#include "schedule.hpp"

namespace vri {

struct MarketParams {
  Curve r = Curve::constant(0.05);
  Curve mu = Curve::constant(0.07);
  Curve sigma = Curve::constant(0.2);
  double theta = 0.2;  // insurer safety loading
  double eta = 0.2;    // reinsurer safety loading
  double k1 = 10.0;    // claim intensity per unit mortality

  double nu1(double t) const { return mu(t) - r(t); }
  // Wealth-drift coefficient of a, and the premium term c, for a given λ̂.
  double nu2(double lambda_hat, double mu_z) const { return eta * k1 * lambda_hat * mu_z; }
  double premium_offset(double lambda_hat, double mu_z) const { return (theta - eta) * k1 * lambda_hat * mu_z; }

  void validate(const DiscreteGrid& grid) const {
    if (!(theta >= 0)) throw ParameterError("market.theta must be nonnegative");
    if (!(eta >= theta)) throw ParameterError("market.eta must be at least market.theta");
    if (!(k1 >= 0)) throw ParameterError("market.k1 must be nonnegative");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid.time(i);
      if (!(sigma(t) > 0)) throw ParameterError("market.sigma must be positive on the grid");
      if (!(r(t) >= 0)) throw ParameterError("market.r must be nonnegative on the grid");
    }
  }
};

enum class ClaimFamily { Exponential, Gamma, Lognormal, BoundedUniform };

inline const char* to_string(ClaimFamily f) {
  switch (f) {
    case ClaimFamily::Exponential: return "exponential";
    case ClaimFamily::Gamma: return "gamma";
    case ClaimFamily::Lognormal: return "lognormal";
    case ClaimFamily::BoundedUniform: return "bounded_uniform";
  }
  return "?";
}

class ClaimModel {
 public:
  ClaimFamily family() const { return family_; }
  double mean() const { return mu_z_; }
  double second_moment() const { return m2_; }
  // Exponential: (rate, -); Gamma: (shape, scale); Lognormal: (m, s); BoundedUniform: (lo, hi).
  double p1() const { return p1_; }
  double p2() const { return p2_; }
  std::optional<double> z_max() const { return z_max_; }

  // Largest possible claim, if finite; a declared cap takes precedence.
  std::optional<double> essential_sup() const {
    if (family_ != ClaimFamily::BoundedUniform) return std::nullopt;
    return z_max_ ? *z_max_ : p2_;
  }

  double sample(Engine& eng) const {
    switch (family_) {
      case ClaimFamily::Exponential: return -std::log(open_uniform(eng)) / p1_;
      case ClaimFamily::Gamma: return std::gamma_distribution<double>(p1_, p2_)(eng);
      case ClaimFamily::Lognormal: return std::lognormal_distribution<double>(p1_, p2_)(eng);
      case ClaimFamily::BoundedUniform: return p1_ + (p2_ - p1_) * open_uniform(eng);
    }
    return 0.0;
  }

  friend ClaimModel moment_fit(ClaimFamily, double, double, std::optional<double>);

 private:
  ClaimFamily family_ = ClaimFamily::Gamma;
  double mu_z_ = 0, m2_ = 0, p1_ = 0, p2_ = 0;
  std::optional<double> z_max_;
};

// Chooses family parameters so that E[z] = mu_z and E[z^2] = m2.
inline ClaimModel moment_fit(ClaimFamily family, double mu_z, double m2, std::optional<double> z_max = std::nullopt) {
  if (!(mu_z > 0)) throw FitError("claims: mean must be positive");
  const double var = m2 - mu_z * mu_z;
  if (var < -1e-12 * m2) throw FitError("claims: need m2 >= mu_z^2");
  if (z_max && family != ClaimFamily::BoundedUniform)
    throw FitError("claims: z_max is only supported for the bounded_uniform family");

  ClaimModel c;
  c.family_ = family;
  c.mu_z_ = mu_z;
  c.m2_ = m2;
  double fm = 0, fm2 = 0;
  switch (family) {
    case ClaimFamily::Exponential:
      if (std::abs(m2 - 2 * mu_z * mu_z) > 1e-10 * m2)
        throw FitError("claims: exponential family requires m2 = 2 mu_z^2");
      c.p1_ = 1.0 / mu_z;
      fm = 1.0 / c.p1_, fm2 = 2.0 / (c.p1_ * c.p1_);
      break;
    case ClaimFamily::Gamma:
      if (!(var > 0)) throw FitError("claims: gamma family requires m2 > mu_z^2");
      c.p1_ = mu_z * mu_z / var;
      c.p2_ = var / mu_z;
      fm = c.p1_ * c.p2_, fm2 = c.p1_ * (c.p1_ + 1) * c.p2_ * c.p2_;
      break;
    case ClaimFamily::Lognormal: {
      if (!(var > 0)) throw FitError("claims: lognormal family requires m2 > mu_z^2");
      const double s2 = std::log(m2 / (mu_z * mu_z));
      c.p1_ = std::log(mu_z) - 0.5 * s2;
      c.p2_ = std::sqrt(s2);
      fm = std::exp(c.p1_ + 0.5 * s2), fm2 = std::exp(2 * c.p1_ + 2 * s2);
      break;
    }
    case ClaimFamily::BoundedUniform: {
      const double h = std::sqrt(3.0 * std::max(var, 0.0));
      c.p1_ = mu_z - h;
      c.p2_ = mu_z + h;
      if (c.p1_ < 0) throw FitError("claims: bounded_uniform support would go negative (need m2 <= 4/3 mu_z^2)");
      if (z_max && *z_max < c.p2_) throw FitError("claims: z_max lies below the fitted support");
      c.z_max_ = z_max;
      fm = 0.5 * (c.p1_ + c.p2_), fm2 = (c.p1_ * c.p1_ + c.p1_ * c.p2_ + c.p2_ * c.p2_) / 3.0;
      break;
    }
  }
  if (std::abs(fm - mu_z) > 1e-10 * mu_z || std::abs(fm2 - m2) > 1e-10 * m2)
    throw FitError("claims: fitted moments do not reproduce the targets");
  return c;
}

struct ClaimEvent {
  double time;
  std::size_t step;  // claim falls in (t_step, t_step + dt)
  double size;
};

struct MarketScenario {
  DiscreteGrid grid;
  std::vector<double> asset;
  std::vector<double> dW1;
  std::vector<ClaimEvent> claims;
  std::shared_ptr<const MortalityPath> mortality;
  std::size_t offset = 0;  // mortality index of grid node 0

  double lambda_hat(std::size_t i) const { return mortality->lambda_hat[offset + i]; }
};

inline MortalityPath constant_mortality_path(const DiscreteGrid& grid, double lambda) {
  return {grid, std::vector<double>(grid.size(), lambda), std::vector<double>(grid.size(), lambda),
          std::vector<double>(grid.size(), lambda), std::vector<double>(grid.n_steps(), 0.0)};
}

// Market on the mortality grid from node `offset` on. Claims arrive by per-step
// thinning with probability k1 λ̂_i dt and land uniformly inside the step.
inline MarketScenario simulate_scenario(const MarketParams& mkt, const ClaimModel& claims,
                                        std::shared_ptr<const MortalityPath> mortality, std::size_t offset,
                                        Engine& asset_eng, Engine& claim_eng, double S0 = 1.0) {
  if (!mortality) throw ParameterError("scenario: missing mortality path");
  const DiscreteGrid& mg = mortality->grid;
  if (offset >= mg.n_steps()) throw DomainError("scenario: offset leaves no steps");
  MarketScenario sc{mg.tail(offset), {}, {}, {}, std::move(mortality), offset};
  const auto& g = sc.grid;
  const std::size_t n = g.n_steps();
  const double dt = g.dt(), sq = std::sqrt(dt);

  sc.asset.resize(n + 1);
  sc.dW1.resize(n);
  sc.asset[0] = S0;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = g.time(i), s = mkt.sigma(t);
    sc.dW1[i] = sq * normal(asset_eng);
    sc.asset[i + 1] = sc.asset[i] * std::exp((mkt.mu(t) - 0.5 * s * s) * dt + s * sc.dW1[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double p = mkt.k1 * sc.lambda_hat(i) * dt;
    if (p >= 1.0) throw ResolutionError("scenario: claim probability per step reaches 1; refine the grid");
    const double u = std::generate_canonical<double, 53>(claim_eng);
    if (u < p) {
      const double v = open_uniform(claim_eng);
      sc.claims.push_back({g.time(i) + v * dt, i, claims.sample(claim_eng)});
    }
  }
  return sc;
}

inline MarketScenario simulate_scenario(const MarketParams& mkt, const ClaimModel& claims,
                                        std::shared_ptr<const MortalityPath> mortality, std::size_t offset,
                                        std::uint64_t seed, std::uint64_t index = 0, double S0 = 1.0) {
  Engine a = make_engine(seed, Stream::Asset, index);
  Engine c = make_engine(seed, Stream::Claims, index);
  return simulate_scenario(mkt, claims, std::move(mortality), offset, a, c, S0);
}

struct WealthPath {
  DiscreteGrid grid;
  std::vector<double> X;
  StrategySchedule controls;
};

// Feedback rule (step index, time, current wealth) -> control.
using ControlRule = std::function<Control(std::size_t, double, double)>;

namespace detail {

// X_{i+1} = X_i + [rX + ν1π + ν2 a + c + a k1 λ̂ μz] dt + πσΔW1 - a Σ z,
// the bracket's last term being the compensator of the claim measure.
inline double wealth_step(const MarketScenario& sc, const MarketParams& mkt, const ClaimModel& claims, std::size_t i,
                          double X, Control u, std::size_t& next_claim) {
  const double t = sc.grid.time(i), dt = sc.grid.dt(), lh = sc.lambda_hat(i), mz = claims.mean();
  const double drift = mkt.r(t) * X + mkt.nu1(t) * u.pi + mkt.nu2(lh, mz) * u.a + mkt.premium_offset(lh, mz) +
                       u.a * mkt.k1 * lh * mz;
  double jumps = 0.0;
  while (next_claim < sc.claims.size() && sc.claims[next_claim].step == i) jumps += sc.claims[next_claim++].size;
  return X + drift * dt + u.pi * mkt.sigma(t) * sc.dW1[i] - u.a * jumps;
}

}  // namespace detail

inline WealthPath propagate_wealth(const MarketScenario& sc, const MarketParams& mkt, const ClaimModel& claims,
                                   const StrategySchedule& controls, double X0) {
  if (controls.pi.size() != sc.grid.size() || controls.a.size() != sc.grid.size())
    throw ShapeError("wealth: control schedule does not match scenario grid");
  WealthPath w{sc.grid, std::vector<double>(sc.grid.size()), controls};
  w.X[0] = X0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < sc.grid.n_steps(); ++i)
    w.X[i + 1] = detail::wealth_step(sc, mkt, claims, i, w.X[i], controls.at(i), next);
  return w;
}

inline WealthPath propagate_wealth(const MarketScenario& sc, const MarketParams& mkt, const ClaimModel& claims,
                                   const ControlRule& rule, double X0, Regime regime = Regime::Custom,
                                   ControlConstraint constraint = ControlConstraint::NonNegative) {
  WealthPath w{sc.grid, std::vector<double>(sc.grid.size()), StrategySchedule(sc.grid, regime, constraint)};
  w.X[0] = X0;
  std::size_t next = 0;
  for (std::size_t i = 0; i <= sc.grid.n_steps(); ++i) {
    const Control u = rule(i, sc.grid.time(i), w.X[i]);
    w.controls.pi[i] = u.pi;
    w.controls.a[i] = u.a;
    if (i < sc.grid.n_steps()) w.X[i + 1] = detail::wealth_step(sc, mkt, claims, i, w.X[i], u, next);
  }
  return w;
}

}  // namespace vri
