#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curve.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "market.hpp"
#include "mortality.hpp"
#include "resolvent.hpp"
#include "riccati.hpp"
#include "schedule.hpp"

namespace vri {

// Objective weight on E[X_T] is phi1 * x_t + phi2; exactly one of them is positive.
struct RiskAversion {
  double phi1 = 1.0;
  double phi2 = 0.0;

  void validate() const {
    if (!(phi1 >= 0) || !(phi2 >= 0)) throw ParameterError("risk: phi1 and phi2 must be nonnegative");
    if (phi1 > 0 && phi2 > 0)
      throw RegimeError("risk: mixed risk aversion (phi1 > 0 and phi2 > 0) has no closed-form equilibrium");
  }
  Regime regime() const {
    validate();
    return phi1 > 0 ? Regime::StateDependent : Regime::Constant;
  }
  double weight(double x_t) const { return phi1 * x_t + phi2; }
};

inline double project_unit_interval(double x) { return std::clamp(x, 0.0, 1.0); }

// pi*_s = nu1/sigma^2 phi2 e^{-∫_s^T r},  a*_s = eta mu_z / E[z^2] phi2 e^{-∫_s^T r}
inline StrategySchedule constant_ra_strategy(const MarketParams& m, const ClaimModel& z, const RiskAversion& risk,
                                             const DiscreteGrid& grid) {
  if (risk.regime() != Regime::Constant) throw RegimeError("constant_ra_strategy: requires phi1 = 0");
  StrategySchedule out(grid, Regime::Constant, ControlConstraint::NonNegative);
  const auto R = cumulative_integral(m.r, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = grid.time(i), sig = m.sigma(s);
    const double d = risk.phi2 * std::exp(-(R.back() - R[i]));
    out.pi[i] = m.nu1(s) / (sig * sig) * d;
    out.a[i] = m.eta * z.mean() / z.second_moment() * d;
  }
  return out;
}

inline StrategySchedule project(StrategySchedule s) {
  for (double& a : s.a) a = project_unit_interval(a);
  s.constraint = ControlConstraint::UnitInterval;
  return s;
}

inline StrategySchedule constrained_ra_strategy(const MarketParams& m, const ClaimModel& z, const RiskAversion& risk,
                                                const DiscreteGrid& grid) {
  return project(constant_ra_strategy(m, z, risk, grid));
}

enum class ExpectationModel { Volterra, Markov };

inline const char* to_string(ExpectationModel e) { return e == ExpectationModel::Volterra ? "volterra" : "markov"; }

// E[λ̂_{t_k} | F_{t_m}] along one path as m moves forward.
class ConditionalMeanSweep {
 public:
  ConditionalMeanSweep(const MortalityModel& model, ExpectationModel kind, const MortalityPath& path, std::size_t m)
      : model_(&model), kind_(kind), path_(&path), m_(m) {
    if (kind_ == ExpectationModel::Volterra) tracker_.emplace(model, path, m);
  }
  ConditionalMeanSweep(const MortalityModel& model, const MortalityPath& path, std::size_t m,
                       std::vector<double> forward)
      : model_(&model), kind_(ExpectationModel::Volterra), path_(&path), m_(m) {
    tracker_.emplace(model, path, m, std::move(forward));
  }

  std::size_t index() const { return m_; }
  ExpectationModel kind() const { return kind_; }

  double mean_hat(std::size_t k) const {
    if (k < m_) throw DomainError("conditional mean: target precedes conditioning time");
    if (tracker_) return tracker_->mean_hat(k);
    const auto& g = model_->grid();
    return markov_conditional_mean(model_->params(), path_->lambda[m_], g.time(m_), g.time(k));
  }

  void advance() {
    if (tracker_) tracker_->advance();
    ++m_;
  }

 private:
  const MortalityModel* model_;
  ExpectationModel kind_;
  const MortalityPath* path_;
  std::size_t m_;
  std::optional<ForwardCurveTracker> tracker_;
};

struct MFactor {
  DiscreteGrid grid;  // [t, T]
  double M;
  double gamma1;                  // phi1 e^{∫_t^T r}
  std::vector<double> integrand;  // values of the Eq. M integrand on `grid`
};

// M_t = e^{∫_t^T 2r} + ∫_t^T e^{∫_t^s 2r} (nu1²/σ² + μz²η²k1/E[z²] E[λ̂_s|F_t]) Γ_s ds, Γ_s = φ1 e^{∫_s^T r},
// by the trapezoid rule on a control grid that ends at T.
class MFactorCalculator {
 public:
  MFactorCalculator(const MarketParams& m, const ClaimModel& z, const RiskAversion& risk, const DiscreteGrid& grid)
      : grid_(grid), R_(cumulative_integral(m.r, grid)), base_(grid.size()), phi1_(risk.phi1) {
    if (risk.regime() != Regime::StateDependent) throw RegimeError("m_factor: requires phi1 > 0");
    if (std::abs(m.theta - m.eta) > 1e-12) throw ParameterError("m_factor: requires theta = eta");
    growth_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double s = grid.time(k), sig = m.sigma(s), nu = m.nu1(s);
      base_[k] = nu * nu / (sig * sig);
      growth_[k] = phi1_ * std::exp(R_[k] + R_.back());
    }
    jump_coef_ = z.mean() * z.mean() * m.eta * m.eta / z.second_moment() * m.k1;
  }

  const DiscreteGrid& grid() const { return grid_; }
  double gamma1(std::size_t i) const { return phi1_ * std::exp(R_.back() - R_[i]); }

  // mean_hat(k) = E[λ̂_{t_k} | F_{t_i}] for control nodes k >= i.
  template <class MeanFn>
  MFactor evaluate(std::size_t i, MeanFn&& mean_hat, bool keep_integrand = false) const {
    const std::size_t n = grid_.n_steps();
    if (i > n) throw ResolutionError("m_factor: evaluation time outside the control grid");
    double integral = 0.0, prev = 0.0;
    const double scale = std::exp(-2.0 * R_[i]);
    std::vector<double> tab;
    if (keep_integrand) tab.reserve(n - i + 1);
    for (std::size_t k = i; k <= n; ++k) {
      const double f = scale * growth_[k] * (base_[k] + jump_coef_ * mean_hat(k));
      if (keep_integrand) tab.push_back(f);
      if (k > i) integral += 0.5 * (prev + f) * grid_.dt();
      prev = f;
    }
    const double M = std::exp(2.0 * (R_.back() - R_[i])) + integral;
    if (!(M >= 1.0 - 1e-12)) throw ConsistencyError("m_factor: M_t < 1");
    return {i < n ? grid_.tail(i) : DiscreteGrid::with_step(grid_.T(), grid_.dt(), 1), M, gamma1(i), std::move(tab)};
  }

 private:
  DiscreteGrid grid_;
  std::vector<double> R_;
  std::vector<double> base_, growth_;  // growth_k = φ1 e^{R_k + R_T}, R from the grid start
  double jump_coef_ = 0.0;
  double phi1_;
};

// Control grid that starts at mortality node `offset` and ends at the model horizon.
inline DiscreteGrid control_grid(const MortalityModel& model, std::size_t offset) { return model.grid().tail(offset); }

// M at control-grid node for time t, conditioning on the path up to t.
inline MFactor m_factor(const MarketParams& m, const ClaimModel& z, const MortalityModel& model,
                        const MortalityPath& path, const RiskAversion& risk, double t,
                        ExpectationModel kind = ExpectationModel::Volterra, std::size_t offset = 0) {
  const MFactorCalculator calc(m, z, risk, control_grid(model, offset));
  const std::size_t mi = model.grid().index_of(t);
  if (mi < offset) throw DomainError("m_factor: t precedes the control horizon");
  const ConditionalMeanSweep sweep(model, kind, path, mi);
  return calc.evaluate(mi - offset, [&](std::size_t k) { return sweep.mean_hat(k + offset); }, true);
}

// M_t at every control node along one path, O(n^2) overall.
inline std::vector<double> m_factor_path(const MFactorCalculator& calc, ConditionalMeanSweep sweep, std::size_t offset) {
  const std::size_t n = calc.grid().n_steps();
  if (sweep.index() != offset) throw DomainError("m_factor_path: sweep must start at the control origin");
  std::vector<double> M(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    M[i] = calc.evaluate(i, [&](std::size_t k) { return sweep.mean_hat(k + offset); }).M;
    if (i < n) sweep.advance();
  }
  return M;
}

// pi* = nu1 Γ X / (M σ²),  a* = η μz Γ X / (M E[z²])
inline Control state_dependent_control(const MarketParams& m, const ClaimModel& z, double M, double gamma1, double X,
                                       double t) {
  if (!(M >= 1.0 - 1e-12)) throw ConsistencyError("state_dependent_strategy: M_t < 1");
  const double sig = m.sigma(t);
  return {m.nu1(t) / (M * sig * sig) * gamma1 * X, m.eta * z.mean() / (M * z.second_moment()) * gamma1 * X};
}

inline Control state_dependent_strategy(const MarketParams& m, const ClaimModel& z, const MortalityModel& model,
                                        const MortalityPath& path, const RiskAversion& risk, double X, double t,
                                        ExpectationModel kind = ExpectationModel::Volterra, std::size_t offset = 0) {
  const MFactor f = m_factor(m, z, model, path, risk, t, kind, offset);
  return state_dependent_control(m, z, f.M, f.gamma1, X, t);
}

namespace detail {

// ∫_t^T e^{∫_t^s 2r} E_B(s - t) ds for t = t_i, using exact cell masses of E_B.
inline double discounted_eb_integral(const std::vector<double>& R, const ResolventTable& tab, std::size_t i,
                                     std::size_t n, double dt, const Curve& r) {
  double acc = 0.0;
  const bool flat = r.is_constant();
  for (std::size_t k = 1; k <= n - i; ++k) {
    const double mass = tab.integrated_e()[k] - tab.integrated_e()[k - 1];
    const double growth = flat ? 2.0 * (*r.constant_value()) * (k - 0.5) * dt
                               : 2.0 * (0.5 * (R[i + k - 1] + R[i + k]) - R[i]);
    acc += std::exp(growth) * mass;
  }
  return acc;
}

}  // namespace detail

// U0(t) with √λ_t in place of √λ_s (the F_t-measurable reading).
inline double u0_diagnostic(const MarketParams& m, const ClaimModel& z, const MortalityModel& model,
                            const MortalityPath& path, double t) {
  const auto& g = model.grid();
  const std::size_t i = g.index_of(t), n = g.n_steps();
  const auto R = cumulative_integral(m.r, g);
  const double coef = z.mean() * z.mean() * m.eta * m.eta / z.second_moment() * m.k1;
  const double integral = detail::discounted_eb_integral(R, model.resolvent(), i, n, g.dt(), m.r);
  return coef * model.params().sigma * std::sqrt(path.lambda[i]) * integral;
}

enum class Verdict { Pass, Fail, NotVerifiable, NotApplicable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::NotVerifiable: return "NOT_VERIFIABLE";
    case Verdict::NotApplicable: return "NOT_APPLICABLE";
  }
  return "?";
}

struct AssumptionReport {
  Regime regime = Regime::StateDependent;
  double bound_uniqueness = 0;     // k1 (2 + η) η
  double sup_integral = 0;         // sup_t ∫_t^T e^{∫2r} k1 E_B(s-t) ds
  double bound_u0 = 0;             // 125 η⁴ σλ² sup²
  double bound_admissibility = 0;  // 18 η φ1 k1
  double required_c2 = 0;
  double c2_limit = 0;             // largest C with a1² - 2Cσλ² > 0
  Verdict largeenough = Verdict::Fail;
  Verdict assumption4 = Verdict::NotApplicable;
  double assumption4_lhs = 0;  // φ1 η μz max{z}
  double assumption4_rhs = 0;  // E[z²]
  bool riccati_on_horizon = false;  // Volterra-Riccati with c0 = C2 solvable on [0, T]
  double riccati_blowup = std::numeric_limits<double>::infinity();

  std::string text() const {
    std::ostringstream os;
    os.precision(6);
    os << "regime: " << to_string(regime) << "\n";
    os << "C2 bound k1(2+eta)eta            = " << bound_uniqueness << "\n";
    if (regime == Regime::StateDependent) {
      os << "sup_t int e^{2r(s-t)} k1 E_B ds  = " << sup_integral << "\n";
      os << "C2 bound 125 eta^4 sigma^2 sup^2 = " << bound_u0 << "\n";
      os << "C2 bound 18 eta phi1 k1          = " << bound_admissibility << "\n";
    }
    os << "required C2                      = " << required_c2 << "\n";
    os << "largeenough limit a1^2/(2 sigma^2) = " << c2_limit << "\n";
    os << "largeenough (a1^2 - 2 C2 sigma^2 > 0): " << to_string(largeenough) << "\n";
    os << "Riccati with c0 = C2 on [0, T]: " << (riccati_on_horizon ? "solvable" : "blows up");
    if (!riccati_on_horizon) os << " at t = " << riccati_blowup;
    os << "\n";
    os << "assumption 4 (phi1 eta mu_z max z <= E[z^2]): " << to_string(assumption4);
    if (assumption4 == Verdict::Pass || assumption4 == Verdict::Fail)
      os << " (" << assumption4_lhs << " vs " << assumption4_rhs << ")";
    os << "\n";
    return os.str();
  }
};

// Sufficient conditions only: a FAIL means the paper's proof does not cover the
// parameters, not that the strategy is wrong.
inline AssumptionReport check_assumptions(const MarketParams& m, const ClaimModel& z, const MortalityParams& mp,
                                          const RiskAversion& risk, const DiscreteGrid& grid) {
  AssumptionReport rep;
  rep.regime = risk.regime();
  rep.bound_uniqueness = m.k1 * (2.0 + m.eta) * m.eta;
  rep.required_c2 = rep.bound_uniqueness;
  if (rep.regime == Regime::StateDependent) {
    const auto tab = resolvent_table(mp.kernel, -mp.a1, DiscreteGrid(0.0, grid.T() - grid.t0(), grid.n_steps()));
    const auto R = cumulative_integral(m.r, grid);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.n_steps(); ++i)
      sup = std::max(sup, m.k1 * detail::discounted_eb_integral(R, tab, i, grid.n_steps(), grid.dt(), m.r));
    rep.sup_integral = sup;
    rep.bound_u0 = 125.0 * std::pow(m.eta, 4) * mp.sigma * mp.sigma * sup * sup;
    rep.bound_admissibility = 18.0 * m.eta * risk.phi1 * m.k1;
    rep.required_c2 = std::max({rep.bound_uniqueness, rep.bound_u0, rep.bound_admissibility});

    rep.assumption4_rhs = z.second_moment();
    if (auto zmax = z.essential_sup()) {
      rep.assumption4_lhs = risk.phi1 * m.eta * z.mean() * *zmax;
      rep.assumption4 = rep.assumption4_lhs <= rep.assumption4_rhs * (1 + 1e-12) ? Verdict::Pass : Verdict::Fail;
    } else {
      rep.assumption4 = m.eta == 0.0 ? Verdict::Pass : Verdict::NotVerifiable;
    }
  }
  rep.c2_limit = mp.sigma > 0 ? mp.a1 * mp.a1 / (2.0 * mp.sigma * mp.sigma) : std::numeric_limits<double>::infinity();
  rep.largeenough = riccati_global_solution_guaranteed(mp.a1, mp.sigma, rep.required_c2) ? Verdict::Pass : Verdict::Fail;

  try {
    solve_riccati(mp, DiscreteGrid(0.0, grid.T() - grid.t0(), std::max<std::size_t>(grid.n_steps(), 256)),
                  rep.required_c2);
    rep.riccati_on_horizon = true;
  } catch (const NoGlobalSolutionError& e) {
    rep.riccati_on_horizon = false;
    rep.riccati_blowup = e.blowup_time();
  }
  return rep;
}

}  // namespace vri
