#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "market.hpp"
#include "mortality.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "strategies.hpp"

namespace vri {

struct ObjectiveEstimate {
  double J = 0;
  double mean_XT = 0;
  double var_XT = 0;
  std::size_t n_paths = 0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double weight = 0;  // phi1 x_t + phi2

  double recomputed_J() const { return 0.5 * var_XT - weight * mean_XT; }

  // Unbiased variance; the standard error uses the influence function of
  // ½var - w mean, and is NaN for a single path.
  static ObjectiveEstimate from_samples(std::span<const double> XT, double weight) {
    if (XT.empty()) throw ParameterError("objective: no samples");
    ObjectiveEstimate e;
    e.n_paths = XT.size();
    e.weight = weight;
    const double n = static_cast<double>(XT.size());
    double mean = 0.0;
    for (double x : XT) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : XT) ss += (x - mean) * (x - mean);
    e.mean_XT = mean;
    e.var_XT = XT.size() > 1 ? ss / (n - 1.0) : 0.0;
    e.J = e.recomputed_J();
    if (XT.size() > 1) {
      const double vb = ss / n;
      double s2 = 0.0;
      for (double x : XT) {
        const double d = x - mean;
        const double psi = 0.5 * (d * d - vb) - weight * d;
        s2 += psi * psi;
      }
      e.std_error = std::sqrt(s2 / (n - 1.0) / n);
    }
    return e;
  }
};

// A policy bound to one scenario: control at node i for current wealth X.
struct BoundPolicy {
  std::function<Control(std::size_t, double)> control;
  std::vector<double> M;  // M-factor along the scenario, for state-dependent policies
};

// Policies that reference a MortalityModel keep a pointer to it.
struct Policy {
  std::string name;
  Regime regime = Regime::Custom;
  ControlConstraint constraint = ControlConstraint::NonNegative;
  std::function<BoundPolicy(const MarketScenario&)> bind;
};

inline Policy schedule_policy(StrategySchedule s, std::string name = "schedule") {
  Policy p{std::move(name), s.regime, s.constraint, {}};
  auto shared = std::make_shared<const StrategySchedule>(std::move(s));
  p.bind = [shared](const MarketScenario& sc) {
    const std::size_t off = shared->grid.index_of(sc.grid.t0());
    if (off + sc.grid.n_steps() > shared->grid.n_steps() || !shared->grid.same_spacing(sc.grid))
      throw ShapeError("policy: schedule does not cover the scenario grid");
    return BoundPolicy{[shared, off](std::size_t i, double) { return shared->at(off + i); }, {}};
  };
  return p;
}

inline Policy zero_policy() {
  return {"zero", Regime::Custom, ControlConstraint::NonNegative,
          [](const MarketScenario&) { return BoundPolicy{[](std::size_t, double) { return Control{}; }, {}}; }};
}

// Feedback form of the state-dependent equilibrium control. `forward`, when given,
// is the forward curve at every scenario's first node (shared prefix).
inline Policy state_dependent_policy(const MarketParams& m, const ClaimModel& z, const MortalityModel& model,
                                     const RiskAversion& risk, ExpectationModel kind = ExpectationModel::Volterra,
                                     std::shared_ptr<const std::vector<double>> forward = nullptr) {
  risk.validate();
  if (risk.regime() != Regime::StateDependent) throw RegimeError("state_dependent_policy: requires phi1 > 0");
  Policy p{std::string("state_dependent_") + to_string(kind), Regime::StateDependent, ControlConstraint::NonNegative,
           {}};
  const MortalityModel* mod = &model;
  p.bind = [m, z, mod, risk, kind, forward](const MarketScenario& sc) {
    const MortalityPath& path = *sc.mortality;
    const std::size_t off = sc.offset;
    const MFactorCalculator calc(m, z, risk, sc.grid);
    std::vector<double> M;
    if (kind == ExpectationModel::Volterra && forward)
      M = m_factor_path(calc, ConditionalMeanSweep(*mod, path, off, *forward), off);
    else
      M = m_factor_path(calc, ConditionalMeanSweep(*mod, kind, path, off), off);
    std::vector<double> gamma(M.size());
    for (std::size_t i = 0; i < M.size(); ++i) gamma[i] = calc.gamma1(i);
    auto grid = sc.grid;
    BoundPolicy b;
    b.M = M;
    b.control = [m, z, M = std::move(M), gamma = std::move(gamma), grid](std::size_t i, double X) {
      return state_dependent_control(m, z, M[i], gamma[i], X, grid.time(i));
    };
    return b;
  };
  return p;
}

inline Policy scaled_policy(Policy base, double pi_scale, double a_scale, std::string name) {
  Policy p{std::move(name), Regime::Custom, base.constraint, {}};
  auto inner = std::move(base.bind);
  p.bind = [inner, pi_scale, a_scale](const MarketScenario& sc) {
    BoundPolicy b = inner(sc);
    auto f = std::move(b.control);
    b.control = [f, pi_scale, a_scale](std::size_t i, double X) {
      const Control u = f(i, X);
      return Control{pi_scale * u.pi, a_scale * u.a};
    };
    return b;
  };
  return p;
}

inline WealthPath run_policy(const MarketScenario& sc, const MarketParams& m, const ClaimModel& z,
                             const BoundPolicy& b, double X0, const Policy& p) {
  return propagate_wealth(
      sc, m, z, [&](std::size_t i, double, double X) { return b.control(i, X); }, X0, p.regime, p.constraint);
}

// Fresh continuations of a fixed mortality prefix: scenario p keeps the prefix up
// to node m and draws its own mortality, asset and claim noise from `seed`.
class ScenarioFactory {
 public:
  ScenarioFactory(const MortalityModel& model, const MarketParams& m, const ClaimModel& z, MortalityPath prefix,
                  std::size_t start, std::uint64_t seed)
      : model_(&model), m_(m), z_(z), prefix_(std::move(prefix)), start_(start), seed_(seed),
        forward_(std::make_shared<const std::vector<double>>(model.forward_curve(prefix_, start))) {
    if (start_ >= model.grid().n_steps()) throw DomainError("scenario factory: start leaves no steps");
  }

  std::size_t start() const { return start_; }
  double start_time() const { return model_->grid().time(start_); }
  std::shared_ptr<const std::vector<double>> forward() const { return forward_; }
  const MortalityModel& model() const { return *model_; }
  const MortalityPath& prefix() const { return prefix_; }

  MarketScenario make(std::uint64_t p) const {
    Engine eng = make_engine(seed_, Stream::Mortality, p);
    auto path = std::make_shared<const MortalityPath>(model_->continue_path(prefix_, start_, *forward_, eng));
    return simulate_scenario(m_, z_, std::move(path), start_, seed_, p);
  }

 private:
  const MortalityModel* model_;
  MarketParams m_;
  ClaimModel z_;
  MortalityPath prefix_;
  std::size_t start_;
  std::uint64_t seed_;
  std::shared_ptr<const std::vector<double>> forward_;
};

// J(t, X_t; u) by Monte Carlo over continuations of the factory's prefix.
inline ObjectiveEstimate evaluate_objective(const Policy& policy, const ScenarioFactory& scenarios,
                                            const MarketParams& m, const ClaimModel& z, const RiskAversion& risk,
                                            double X_t, std::size_t n_paths) {
  if (n_paths < 2) throw ParameterError("evaluate_objective: need at least two paths");
  std::vector<double> XT(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    const auto sc = scenarios.make(p);
    XT[p] = run_policy(sc, m, z, policy.bind(sc), X_t, policy).X.back();
  });
  return ObjectiveEstimate::from_samples(XT, risk.weight(X_t));
}

// Diagonal s = t of the adjoint processes.
struct AdjointDiagonal {
  double p = 0;
  double Z1 = 0;
  double jump = 0;  // ∫ z Z2(t, z; t) δ(dz)
};

// Constant regime: p = Φ_t = -φ2 e^{∫_t^T r}, M_t = e^{∫_t^T 2r}.
// State-dependent regime: p = -Γ_t X_t with M_t supplied by the caller.
inline AdjointDiagonal adjoint_closed_form(Regime regime, const MarketParams& m, const ClaimModel& z,
                                           const RiskAversion& risk, double r_tail, std::optional<double> M_t,
                                           double X_t, double lambda_hat, Control u, double t) {
  if (risk.regime() != regime) throw RegimeError("adjoint: regime does not match the risk aversion");
  double M = 0.0, p = 0.0;
  if (regime == Regime::Constant) {
    M = std::exp(2.0 * r_tail);
    p = -risk.phi2 * std::exp(r_tail);
  } else {
    if (!M_t) throw ParameterError("adjoint: state-dependent regime needs M_t");
    M = *M_t;
    p = -risk.phi1 * std::exp(r_tail) * X_t;
  }
  return {p, M * u.pi * m.sigma(t), -M * u.a * m.k1 * lambda_hat * z.second_moment()};
}

struct FocResidual {
  double investment = 0;  // |ν1 p + σ Z1|
  double g = 0;           // ν2 p - ∫ z Z2 δ(dz)
  bool variational_ok = true;
};

inline FocResidual verify_first_order_condition(const AdjointDiagonal& adj, const MarketParams& m,
                                                const ClaimModel& z, double lambda_hat, double a,
                                                ControlConstraint constraint, double t, double tol = 1e-6) {
  FocResidual r;
  r.investment = std::abs(m.nu1(t) * adj.p + m.sigma(t) * adj.Z1);
  r.g = m.nu2(lambda_hat, z.mean()) * adj.p - adj.jump;
  if (a <= 0.0)
    r.variational_ok = r.g >= -tol;
  else if (constraint == ControlConstraint::UnitInterval && a >= 1.0)
    r.variational_ok = r.g <= tol;
  else
    r.variational_ok = std::abs(r.g) <= tol;
  return r;
}

struct FocPathReport {
  std::vector<double> investment;
  std::vector<double> g;
  double max_investment = 0;
  double max_g_violation = 0;  // distance of g from its admissible set
  bool ok = true;
};

// Checks the first-order conditions at every node of a realized wealth path.
// `M` is required for the state-dependent regime.
inline FocPathReport verify_path(Regime regime, const MarketParams& m, const ClaimModel& z, const RiskAversion& risk,
                                 const MarketScenario& sc, const WealthPath& w, const std::vector<double>& M,
                                 double tol = 1e-6) {
  const auto R = cumulative_integral(m.r, sc.grid);
  FocPathReport rep;
  for (std::size_t i = 0; i < sc.grid.size(); ++i) {
    const double t = sc.grid.time(i);
    std::optional<double> Mi;
    if (regime == Regime::StateDependent) Mi = M.at(i);
    const Control u = w.controls.at(i);
    const auto adj = adjoint_closed_form(regime, m, z, risk, R.back() - R[i], Mi, w.X[i], sc.lambda_hat(i), u, t);
    const auto r = verify_first_order_condition(adj, m, z, sc.lambda_hat(i), u.a, w.controls.constraint, t, tol);
    double viol = std::abs(r.g);
    if (u.a <= 0.0) viol = std::max(0.0, -r.g);
    else if (w.controls.constraint == ControlConstraint::UnitInterval && u.a >= 1.0) viol = std::max(0.0, r.g);
    rep.investment.push_back(r.investment);
    rep.g.push_back(r.g);
    rep.max_investment = std::max(rep.max_investment, r.investment);
    rep.max_g_violation = std::max(rep.max_g_violation, viol);
  }
  rep.ok = rep.max_investment <= tol && rep.max_g_violation <= tol;
  return rep;
}

// Θ(s) = ½ e^{∫_s^T 2r} (σ(s)² + k1 λ̂_s E[z²]); returns its minimum over the scenario.
inline double min_theta(const MarketParams& m, const ClaimModel& z, const MarketScenario& sc) {
  const auto R = cumulative_integral(m.r, sc.grid);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sc.grid.size(); ++i) {
    const double s = sc.grid.time(i), sig = m.sigma(s);
    lo = std::min(lo, 0.5 * std::exp(2.0 * (R.back() - R[i])) * (sig * sig + m.k1 * sc.lambda_hat(i) * z.second_moment()));
  }
  return lo;
}

// Spike on [t, t + ε): π += ρ1 and a is replaced by ρ2 = rho2_base + rho2_slope a*.
struct PerturbationSpec {
  double t = 0;
  double epsilon = 0.1;
  double rho1 = 0;
  double rho2_base = 0;
  double rho2_slope = 1;  // (0, 1) keeps a = a*

  void validate(double T, ControlConstraint c) const {
    if (!(epsilon > 0)) throw ParameterError("perturbation: epsilon must be positive");
    if (t < -1e-12 || t + epsilon > T + 1e-9) throw DomainError("perturbation: [t, t + epsilon] leaves [0, T]");
    if (!(rho2_base >= 0) || !(rho2_slope >= 0)) throw DomainError("perturbation: rho2 must be nonnegative");
    if (c == ControlConstraint::UnitInterval && rho2_base > 1.0) throw DomainError("perturbation: rho2 outside [0, 1]");
  }
  // Under the unit-interval constraint the replacement level is projected onto [0, 1].
  double rho2(double a_star, ControlConstraint c = ControlConstraint::NonNegative) const {
    const double v = rho2_base + rho2_slope * a_star;
    return c == ControlConstraint::UnitInterval ? project_unit_interval(v) : v;
  }
};

enum class PerturbationMode { OpenLoop, ClosedLoop };

struct LadderPoint {
  double epsilon;
  double estimate;   // [J(perturbed) - J(u)] / ε
  double std_error;  // NaN for a single path
  double z() const { return estimate / std_error; }
};

struct PerturbationResult {
  PerturbationSpec spec;
  std::vector<LadderPoint> ladder;
  double min_z() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : ladder) v = std::min(v, p.z());
    return v;
  }
};

// Each spec's (t, rho1, rho2) is run over the ε ladder with common random numbers:
// the perturbed and unperturbed wealth are driven by the same scenario. Open-loop
// keeps the realized equilibrium controls outside the window; closed-loop re-applies
// the feedback rule to the perturbed wealth. spec.t must equal the factory start time
// and spec.epsilon is ignored in favour of the ladder.
inline std::vector<PerturbationResult> perturbation_test(const Policy& policy, const ScenarioFactory& scenarios,
                                                         const MarketParams& m, const ClaimModel& z,
                                                         const RiskAversion& risk, double X_t,
                                                         const std::vector<PerturbationSpec>& specs,
                                                         const std::vector<double>& ladder, std::size_t n_paths,
                                                         PerturbationMode mode = PerturbationMode::OpenLoop) {
  if (n_paths < 2) throw ParameterError("perturbation_test: need at least two paths");
  if (ladder.empty()) throw ParameterError("perturbation_test: empty epsilon ladder");
  const auto& mg = scenarios.model().grid();
  const double t0 = scenarios.start_time(), dt = mg.dt();
  std::vector<std::size_t> width(ladder.size());
  for (std::size_t e = 0; e < ladder.size(); ++e) {
    const double cells = ladder[e] / dt;
    width[e] = static_cast<std::size_t>(std::llround(cells));
    if (width[e] == 0 || std::abs(cells - static_cast<double>(width[e])) > 1e-6)
      throw ResolutionError("perturbation_test: epsilon must be a positive multiple of the grid step");
  }
  for (const auto& s : specs) {
    if (std::abs(s.t - t0) > 1e-9 * std::max(1.0, std::abs(t0)))
      throw DomainError("perturbation_test: spec time must equal the scenario start time");
    for (double eps : ladder) {
      PerturbationSpec c = s;
      c.epsilon = eps;
      c.validate(mg.T(), policy.constraint);
    }
  }

  const std::size_t ns = specs.size(), ne = ladder.size();
  std::vector<double> base(n_paths);
  std::vector<double> pert(n_paths * ns * ne);
  parallel_for(n_paths, [&](std::size_t p) {
    const auto sc = scenarios.make(p);
    const BoundPolicy b = policy.bind(sc);
    const WealthPath w = run_policy(sc, m, z, b, X_t, policy);
    base[p] = w.X.back();
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t e = 0; e < ne; ++e) {
        const std::size_t k = width[e];
        const auto& sp = specs[s];
        double XT = 0.0;
        if (mode == PerturbationMode::OpenLoop) {
          StrategySchedule u = w.controls;
          for (std::size_t i = 0; i < k; ++i) {
            u.pi[i] += sp.rho1;
            u.a[i] = sp.rho2(u.a[i], policy.constraint);
          }
          XT = propagate_wealth(sc, m, z, u, X_t).X.back();
        } else {
          const auto rule = [&](std::size_t i, double, double X) {
            Control u = b.control(i, X);
            if (i < k) {
              u.pi += sp.rho1;
              u.a = sp.rho2(u.a, policy.constraint);
            }
            return u;
          };
          XT = propagate_wealth(sc, m, z, rule, X_t).X.back();
        }
        pert[(p * ns + s) * ne + e] = XT;
      }
    }
  });

  const double w = risk.weight(X_t), n = static_cast<double>(n_paths);
  std::vector<PerturbationResult> out;
  for (std::size_t s = 0; s < ns; ++s) {
    PerturbationResult res{specs[s], {}};
    for (std::size_t e = 0; e < ne; ++e) {
      // ΔJ = ½[Var(Xε) - Var(X)] - w E[Xε - X] = ½Cov(D, S) - w mean(D), D = Xε - X, S = Xε + X.
      double md = 0.0, ms = 0.0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        const double xe = pert[(p * ns + s) * ne + e];
        md += xe - base[p];
        ms += xe + base[p];
      }
      md /= n, ms /= n;
      double cov = 0.0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        const double xe = pert[(p * ns + s) * ne + e];
        cov += (xe - base[p] - md) * (xe + base[p] - ms);
      }
      const double cov_b = cov / n;
      double s2 = 0.0;
      for (std::size_t p = 0; p < n_paths; ++p) {
        const double xe = pert[(p * ns + s) * ne + e];
        const double dd = xe - base[p] - md;
        const double psi = 0.5 * (dd * (xe + base[p] - ms) - cov_b) - w * dd;
        s2 += psi * psi;
      }
      const double dJ = 0.5 * cov / (n - 1.0) - w * md;
      const double se = std::sqrt(s2 / (n - 1.0) / n);
      res.ladder.push_back({ladder[e], dJ / ladder[e], se / ladder[e]});
    }
    out.push_back(std::move(res));
  }
  return out;
}

// The 4 (ρ1, ρ2) choices used at each start time: bump π up or down with a = a*,
// drop retention to zero, and raise it to 2a* + 0.1.
inline std::vector<PerturbationSpec> standard_perturbations(double t) {
  return {{t, 0.1, 1.0, 0.0, 1.0}, {t, 0.1, -1.0, 0.0, 1.0}, {t, 0.1, 0.0, 0.0, 0.0}, {t, 0.1, 0.0, 0.1, 2.0}};
}

}  // namespace vri
