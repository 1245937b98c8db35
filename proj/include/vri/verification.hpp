#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "config.hpp"
#include "objective.hpp"
#include "section5.hpp"
#include "strategies.hpp"

namespace vri {

struct VerificationContext {
  ExperimentConfig cfg;
  ClaimModel claims;
  std::shared_ptr<const MortalityModel> model;
  MortalityPath history;  // path 0 of the comparison run, used as the conditioning prefix
  RiskAversion risk;

  VerificationContext(const ExperimentConfig& c, Regime regime)
      : cfg(c),
        claims(c.claim_model()),
        model(std::make_shared<const MortalityModel>(c.mortality, c.mortality_grid())),
        history(*section5_scenario(c, *model, 0).mortality),
        risk(regime == Regime::Constant ? RiskAversion{0.0, c.risk.phi2 > 0 ? c.risk.phi2 : c.constant_phi2}
                                        : RiskAversion{c.risk.phi1 > 0 ? c.risk.phi1 : 1.0, 0.0}) {}

  Regime regime() const { return risk.regime(); }
  std::size_t start_index(double t) const { return model->grid().index_of(t); }

  ScenarioFactory factory(double t, std::uint64_t salt = 0) const {
    return {*model, cfg.market, claims, history, start_index(t), cfg.seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1))};
  }

  Policy equilibrium(const ScenarioFactory& f) const {
    if (regime() == Regime::Constant) {
      auto s = cfg.constraint == ControlConstraint::UnitInterval
                   ? constrained_ra_strategy(cfg.market, claims, risk, control_grid(*model, cfg.control_offset()))
                   : constant_ra_strategy(cfg.market, claims, risk, control_grid(*model, cfg.control_offset()));
      return schedule_policy(std::move(s), "equilibrium");
    }
    return state_dependent_policy(cfg.market, claims, *model, risk, ExpectationModel::Volterra, f.forward());
  }
};

struct FocSuiteResult {
  double max_investment = 0;   // equilibrium paths
  double max_g_violation = 0;
  double min_wrong_investment = std::numeric_limits<double>::infinity();  // π scaled by 1.1
  double min_theta = std::numeric_limits<double>::infinity();
  double min_wealth = std::numeric_limits<double>::infinity();
  std::size_t paths = 0;
};

inline FocSuiteResult foc_suite(const VerificationContext& ctx, std::size_t n_paths) {
  FocSuiteResult out;
  const auto f = ctx.factory(0.0, 101);
  const auto pol = ctx.equilibrium(f);
  const auto wrong = scaled_policy(pol, 1.1, 1.0, "wrong");
  for (std::size_t p = 0; p < n_paths; ++p) {
    const auto sc = f.make(p);
    const auto b = pol.bind(sc);
    const auto w = run_policy(sc, ctx.cfg.market, ctx.claims, b, ctx.cfg.x0, pol);
    const auto rep = verify_path(ctx.regime(), ctx.cfg.market, ctx.claims, ctx.risk, sc, w, b.M);
    out.max_investment = std::max(out.max_investment, rep.max_investment);
    out.max_g_violation = std::max(out.max_g_violation, rep.max_g_violation);
    out.min_theta = std::min(out.min_theta, min_theta(ctx.cfg.market, ctx.claims, sc));
    for (double x : w.X) out.min_wealth = std::min(out.min_wealth, x);

    const auto bw = wrong.bind(sc);
    auto ww = run_policy(sc, ctx.cfg.market, ctx.claims, bw, ctx.cfg.x0, wrong);
    ww.controls.constraint = w.controls.constraint;
    const auto bad = verify_path(ctx.regime(), ctx.cfg.market, ctx.claims, ctx.risk, sc, ww, bw.M);
    out.min_wrong_investment = std::min(out.min_wrong_investment, bad.max_investment);
    ++out.paths;
  }
  return out;
}

struct PerturbationSuiteResult {
  std::vector<PerturbationResult> equilibrium;
  std::vector<PerturbationResult> anti;  // π negated
  double min_equilibrium_z() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& r : equilibrium) v = std::min(v, r.min_z());
    return v;
  }
  double min_anti_z() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& r : anti) v = std::min(v, r.min_z());
    return v;
  }
};

// 12 specs: t in {0, 1, 2} times the 4 standard (ρ1, ρ2) choices, over ε in {0.2, 0.1, 0.05}.
inline PerturbationSuiteResult perturbation_suite(const VerificationContext& ctx, std::size_t n_paths,
                                                  PerturbationMode mode) {
  PerturbationSuiteResult out;
  const std::vector<double> ladder{0.2, 0.1, 0.05};
  for (double t : {0.0, 1.0, 2.0}) {
    const auto f = ctx.factory(t, static_cast<std::uint64_t>(t) + 1);
    const auto pol = ctx.equilibrium(f);
    const auto anti = scaled_policy(pol, -1.0, 1.0, "anti");
    const auto specs = standard_perturbations(t);
    for (auto& r : perturbation_test(pol, f, ctx.cfg.market, ctx.claims, ctx.risk, ctx.cfg.x0, specs, ladder, n_paths, mode))
      out.equilibrium.push_back(std::move(r));
    for (auto& r : perturbation_test(anti, f, ctx.cfg.market, ctx.claims, ctx.risk, ctx.cfg.x0, specs, ladder, n_paths, mode))
      out.anti.push_back(std::move(r));
  }
  return out;
}

}  // namespace vri
