#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "market.hpp"
#include "mortality.hpp"
#include "objective.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "strategies.hpp"

namespace vri {

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

// Hash of the noise a model run consumes on the control window: dW0, dW1 and claims.
inline std::uint64_t stream_checksum(const MarketScenario& sc) {
  const auto& dW0 = sc.mortality->dW0;
  std::uint64_t h = fnv1a(dW0.data() + sc.offset, (dW0.size() - sc.offset) * sizeof(double));
  h = fnv1a(sc.dW1.data(), sc.dW1.size() * sizeof(double), h);
  for (const auto& c : sc.claims) {
    h = fnv1a(&c.time, sizeof c.time, h);
    h = fnv1a(&c.size, sizeof c.size, h);
  }
  return h;
}

// 100 (lrd - markov) / markov, or nothing where |markov| is below the floor.
inline std::vector<std::optional<double>> percentage_difference(const std::vector<double>& lrd,
                                                                const std::vector<double>& markov,
                                                                double floor = 1e-8) {
  if (lrd.size() != markov.size()) throw ShapeError("percentage_difference: length mismatch");
  std::vector<std::optional<double>> out(lrd.size());
  for (std::size_t i = 0; i < lrd.size(); ++i)
    if (std::abs(markov[i]) > floor) out[i] = 100.0 * (lrd[i] - markov[i]) / markov[i];
  return out;
}

inline double max_abs(const std::vector<std::optional<double>>& v) {
  double m = 0.0;
  for (const auto& x : v)
    if (x) m = std::max(m, std::abs(*x));
  return m;
}

struct ModelRun {
  WealthPath wealth;
  std::vector<double> M;
  std::uint64_t streams = 0;
};

struct SweepRow {
  double phi1 = 0;
  double max_pct_a = 0;  // figure path
  double max_pct_X = 0;
  ObjectiveEstimate J_lrd, J_markov;
  // Ensemble extension (n_paths > 1): mean and standard error of the per-path maxima.
  double ens_mean_pct_a = 0, ens_se_pct_a = 0, ens_mean_pct_X = 0, ens_se_pct_X = 0;
};

struct ComparisonResult {
  ExperimentConfig config;
  std::shared_ptr<const MortalityPath> mortality;
  MarketScenario scenario;
  Regime regime = Regime::StateDependent;
  ModelRun lrd, markov;  // at the configured risk aversion
  std::vector<std::vector<std::optional<double>>> pct_a, pct_X;  // per sweep value, per control node
  std::vector<SweepRow> rows;
  double constant_regime_max_diff = 0;  // |LRD - Markov| over both controls, constant regime
};

namespace section5_detail {

struct Models {
  std::shared_ptr<const MortalityModel> full;
  std::shared_ptr<const MortalityModel> ablated;  // history removed, restarted at t = 0
};

// The comparison's "LRD" run either conditions on the whole history or, under the
// ablation flag, on a model restarted at t = 0 from the observed λ_0.
struct Bound {
  MarketScenario scenario;
  std::shared_ptr<const MortalityModel> model;
};

inline Bound lrd_view(const ExperimentConfig& cfg, const Models& models, const MarketScenario& sc) {
  if (!cfg.history_ablation || sc.offset == 0) return {sc, models.full};
  const MortalityPath& full = *sc.mortality;
  const std::size_t off = sc.offset;
  auto p = cfg.mortality;
  p.lambda0 = std::max(full.lambda[off], 1e-12);
  auto model = std::make_shared<const MortalityModel>(p, sc.grid);
  auto slice = [off](const std::vector<double>& v) { return std::vector<double>(v.begin() + off, v.end()); };
  auto path = std::make_shared<const MortalityPath>(
      MortalityPath{sc.grid, slice(full.lambda), slice(full.lambda_hat), slice(full.lambda_raw), slice(full.dW0)});
  MarketScenario view = sc;
  view.mortality = std::move(path);
  view.offset = 0;
  return {std::move(view), std::move(model)};
}

inline ModelRun run_model(const ExperimentConfig& cfg, const ClaimModel& z, const RiskAversion& risk,
                          const MortalityModel& model, const MarketScenario& sc, ExpectationModel kind) {
  if (risk.regime() == Regime::Constant) {
    auto pol = schedule_policy(cfg.constraint == ControlConstraint::UnitInterval
                                   ? constrained_ra_strategy(cfg.market, z, risk, sc.grid)
                                   : constant_ra_strategy(cfg.market, z, risk, sc.grid));
    return {run_policy(sc, cfg.market, z, pol.bind(sc), cfg.x0, pol), {}, stream_checksum(sc)};
  }
  const auto pol = state_dependent_policy(cfg.market, z, model, risk, kind);
  const auto b = pol.bind(sc);
  return {run_policy(sc, cfg.market, z, b, cfg.x0, pol), b.M, stream_checksum(sc)};
}

}  // namespace section5_detail

inline MarketScenario section5_scenario(const ExperimentConfig& cfg, const MortalityModel& model, std::uint64_t p) {
  Engine eng = make_engine(cfg.seed, Stream::Mortality, p);
  auto path = std::make_shared<const MortalityPath>(model.simulate(eng));
  return simulate_scenario(cfg.market, cfg.claim_model(), std::move(path), cfg.control_offset(), cfg.seed, p);
}

// One shared mortality path on [history_start, T] and one market scenario on [0, T];
// both models see the same shocks and differ only in E[λ̂_s | F_t].
inline ComparisonResult run_section5(const ExperimentConfig& cfg) {
  using namespace section5_detail;
  const ClaimModel z = cfg.claim_model();
  Models models{std::make_shared<const MortalityModel>(cfg.mortality, cfg.mortality_grid()), nullptr};

  MarketScenario shared = section5_scenario(cfg, *models.full, 0);
  const auto view = lrd_view(cfg, models, shared);
  ComparisonResult res{cfg,
                       shared.mortality,
                       shared,
                       cfg.risk.regime(),
                       run_model(cfg, z, cfg.risk, *view.model, view.scenario, ExpectationModel::Volterra),
                       run_model(cfg, z, cfg.risk, *models.full, shared, ExpectationModel::Markov),
                       {},
                       {},
                       {},
                       0.0};

  const RiskAversion constant{0.0, cfg.constant_phi2};
  const auto c_lrd = run_model(cfg, z, constant, *view.model, view.scenario, ExpectationModel::Volterra);
  const auto c_mkv = run_model(cfg, z, constant, *models.full, res.scenario, ExpectationModel::Markov);
  for (std::size_t i = 0; i < c_lrd.wealth.controls.pi.size(); ++i)
    res.constant_regime_max_diff =
        std::max({res.constant_regime_max_diff, std::abs(c_lrd.wealth.controls.pi[i] - c_mkv.wealth.controls.pi[i]),
                  std::abs(c_lrd.wealth.controls.a[i] - c_mkv.wealth.controls.a[i])});

  const std::size_t ns = cfg.phi1_sweep.size(), np = cfg.n_paths;
  // maxima[p][s] = (max pct a, max pct X); XT[p][s] = (lrd, markov)
  std::vector<std::vector<std::pair<double, double>>> maxima(np, std::vector<std::pair<double, double>>(ns));
  std::vector<std::vector<std::pair<double, double>>> XT(np, std::vector<std::pair<double, double>>(ns));
  res.pct_a.resize(ns);
  res.pct_X.resize(ns);

  parallel_for(np, [&](std::size_t p) {
    const MarketScenario sc = p == 0 ? res.scenario : section5_scenario(cfg, *models.full, p);
    const auto v = lrd_view(cfg, models, sc);
    for (std::size_t s = 0; s < ns; ++s) {
      const RiskAversion risk{cfg.phi1_sweep[s], 0.0};
      const auto a = run_model(cfg, z, risk, *v.model, v.scenario, ExpectationModel::Volterra);
      const auto b = run_model(cfg, z, risk, *models.full, sc, ExpectationModel::Markov);
      auto pa = percentage_difference(a.wealth.controls.a, b.wealth.controls.a);
      auto px = percentage_difference(a.wealth.X, b.wealth.X);
      maxima[p][s] = {max_abs(pa), max_abs(px)};
      XT[p][s] = {a.wealth.X.back(), b.wealth.X.back()};
      if (p == 0) {
        res.pct_a[s] = std::move(pa);
        res.pct_X[s] = std::move(px);
      }
    }
  });

  for (std::size_t s = 0; s < ns; ++s) {
    SweepRow row;
    row.phi1 = cfg.phi1_sweep[s];
    row.max_pct_a = maxima[0][s].first;
    row.max_pct_X = maxima[0][s].second;
    std::vector<double> xl(np), xm(np), ma(np), mx(np);
    for (std::size_t p = 0; p < np; ++p) {
      xl[p] = XT[p][s].first;
      xm[p] = XT[p][s].second;
      ma[p] = maxima[p][s].first;
      mx[p] = maxima[p][s].second;
    }
    const double w = row.phi1 * cfg.x0;
    row.J_lrd = ObjectiveEstimate::from_samples(xl, w);
    row.J_markov = ObjectiveEstimate::from_samples(xm, w);
    const auto ea = ObjectiveEstimate::from_samples(ma, 0.0), ex = ObjectiveEstimate::from_samples(mx, 0.0);
    const double rn = std::sqrt(static_cast<double>(np));
    row.ens_mean_pct_a = ea.mean_XT;
    row.ens_mean_pct_X = ex.mean_XT;
    row.ens_se_pct_a = np > 1 ? std::sqrt(ea.var_XT) / rn : std::numeric_limits<double>::quiet_NaN();
    row.ens_se_pct_X = np > 1 ? std::sqrt(ex.var_XT) / rn : std::numeric_limits<double>::quiet_NaN();
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace vri
