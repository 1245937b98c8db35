// vri: command-line front end for the Volterra mortality / reinsurance library.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "vri/config.hpp"
#include "vri/csv_export.hpp"
#include "vri/errors.hpp"
#include "vri/section5.hpp"
#include "vri/strategies.hpp"
#include "vri/verification.hpp"

namespace fs = std::filesystem;
using namespace vri;

namespace {

struct Globals {
  std::string config;
  std::map<std::string, std::string> overrides;
};

ExperimentConfig resolve(const Globals& g) {
  if (g.config.empty()) {
    std::istringstream empty;
    return parse_config(empty, g.overrides);
  }
  return load_config(g.config, g.overrides);
}

void log_provenance(const ExperimentConfig& cfg) {
  if (cfg.all_default) std::cerr << "config: all values are defaults\n";
  for (const auto& line : cfg.provenance) std::cerr << "config: " << line << "\n";
}

int cmd_simulate(const ExperimentConfig& cfg) {
  const MortalityModel model(cfg.mortality, cfg.mortality_grid());
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  CsvTable mort{{"t"}, {}};
  std::vector<MarketScenario> scen;
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    mort.header.push_back("lambda_hat_" + std::to_string(p));
    scen.push_back(section5_scenario(cfg, model, p));
  }
  const auto& g = model.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<std::optional<double>> row{g.time(i)};
    for (const auto& sc : scen) row.push_back(sc.mortality->lambda_hat[i]);
    mort.rows.push_back(std::move(row));
  }
  write_text(dir / "mortality.csv", mort.text());

  const auto& sc = scen.front();
  CsvTable market{{"t", "asset"}, {}};
  for (std::size_t i = 0; i < sc.grid.size(); ++i) market.rows.push_back({sc.grid.time(i), sc.asset[i]});
  write_text(dir / "market.csv", market.text());
  CsvTable claims{{"t", "size"}, {}};
  for (const auto& c : sc.claims) claims.rows.push_back({c.time, c.size});
  write_text(dir / "claims.csv", claims.text());

  std::printf("simulated %zu mortality path(s) on [%g, %g], %zu steps; path 0 has %zu claims\n", cfg.n_paths,
              g.t0(), g.T(), g.n_steps(), sc.claims.size());
  std::printf("wrote %s\n", (dir / "mortality.csv").string().c_str());
  return 0;
}

int cmd_strategy(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  const auto r = run_section5(cfg);
  CsvTable t{{"t", "M_lrd", "pi_lrd", "a_lrd", "X_lrd", "M_markov", "pi_markov", "a_markov", "X_markov"}, {}};
  const auto& g = r.scenario.grid;
  const auto opt = [](const std::vector<double>& v, std::size_t i) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return v[i];
  };
  for (std::size_t i = 0; i < g.size(); ++i)
    t.rows.push_back({g.time(i), opt(r.lrd.M, i), r.lrd.wealth.controls.pi[i], r.lrd.wealth.controls.a[i],
                      r.lrd.wealth.X[i], opt(r.markov.M, i), r.markov.wealth.controls.pi[i],
                      r.markov.wealth.controls.a[i], r.markov.wealth.X[i]});
  write_text(dir / "strategy.csv", t.text());
  std::printf("regime %s, constraint %s\n", to_string(r.regime), to_string(cfg.constraint));
  std::printf("%-8s %-12s %-12s %-12s %-12s\n", "t", "pi_lrd", "a_lrd", "pi_markov", "a_markov");
  for (std::size_t i = 0; i < g.size(); i += std::max<std::size_t>(1, g.n_steps() / 6))
    std::printf("%-8.3g %-12.6g %-12.6g %-12.6g %-12.6g\n", g.time(i), r.lrd.wealth.controls.pi[i],
                r.lrd.wealth.controls.a[i], r.markov.wealth.controls.pi[i], r.markov.wealth.controls.a[i]);
  std::printf("wrote %s\n", (dir / "strategy.csv").string().c_str());
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  const auto r = run_section5(cfg);
  const auto files = export_csv(r, cfg.out_dir);
  std::printf("%-6s %-14s %-14s %-14s %-14s\n", "phi1", "max_pct_a", "max_pct_X", "J_lrd", "J_markov");
  for (const auto& row : r.rows)
    std::printf("%-6g %-14.6g %-14.6g %-14.8g %-14.8g\n", row.phi1, row.max_pct_a, row.max_pct_X, row.J_lrd.J,
                row.J_markov.J);
  std::printf("constant regime max |LRD - Markov| = %g\n", r.constant_regime_max_diff);
  for (const auto& f : files) std::printf("wrote %s\n", (fs::path(cfg.out_dir) / f.name).string().c_str());
  return 0;
}

int cmd_verify(const ExperimentConfig& cfg) {
  const VerificationContext ctx(cfg, cfg.risk.regime());
  const auto foc = foc_suite(ctx, 20);
  std::printf("regime %s\n", to_string(ctx.regime()));
  std::printf("first-order conditions over %zu paths: max |nu1 p + sigma Z1| = %.3g, max g violation = %.3g  %s\n",
              foc.paths, foc.max_investment, foc.max_g_violation,
              foc.max_investment < 1e-6 && foc.max_g_violation < 1e-6 ? "PASS" : "FAIL");
  std::printf("falsification (pi x 1.1): min residual = %.3g  %s\n", foc.min_wrong_investment,
              foc.min_wrong_investment > 1e-3 ? "PASS" : "FAIL");
  std::printf("min Theta = %.4g, min wealth = %.4g\n", foc.min_theta, foc.min_wealth);

  const auto suite = perturbation_suite(ctx, cfg.verify_paths, cfg.verify_mode);
  std::printf("perturbation suite (%zu paths, %s):\n", cfg.verify_paths,
              cfg.verify_mode == PerturbationMode::OpenLoop ? "open loop" : "closed loop");
  for (const auto* set : {&suite.equilibrium, &suite.anti}) {
    const char* label = set == &suite.equilibrium ? "equilibrium" : "anti";
    for (const auto& r : *set) {
      std::printf("  %-11s t=%g rho1=%+g rho2=%g+%g*a*:", label, r.spec.t, r.spec.rho1, r.spec.rho2_base,
                  r.spec.rho2_slope);
      for (const auto& l : r.ladder) std::printf("  eps=%g %.4g (se %.2g)", l.epsilon, l.estimate, l.std_error);
      std::printf("\n");
    }
  }
  std::printf("equilibrium min z = %.3f  %s\n", suite.min_equilibrium_z(),
              suite.min_equilibrium_z() >= -3.0 ? "PASS" : "FAIL");
  std::printf("anti-equilibrium min z = %.3f  %s\n", suite.min_anti_z(), suite.min_anti_z() < -3.0 ? "PASS" : "FAIL");
  return 0;
}

int cmd_check(const ExperimentConfig& cfg) {
  const auto grid = DiscreteGrid::with_step(0.0, cfg.dt, cfg.control_steps());
  const auto rep = check_assumptions(cfg.market, cfg.claim_model(), cfg.mortality, cfg.risk, grid);
  std::cout << rep.text();
  std::cout << "note: these are sufficient conditions; a FAIL means the existence and admissibility proofs do not "
               "cover these parameters, not that the strategy is wrong\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volterra mortality, mean-variance reinsurance-investment equilibrium strategies"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  std::size_t paths = 0, steps = 0;
  std::string out;
  app.add_option("--config", g.config, "configuration file (section.key = value)");
  auto* o_seed = app.add_option("--seed", seed, "root seed");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_paths = app.add_option("--paths", paths, "number of paths")->check(CLI::PositiveNumber);
  auto* o_steps = app.add_option("--steps", steps, "control steps on [0, T]")->check(CLI::PositiveNumber);

  std::string which;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"simulate", "simulate mortality and market paths"},
           {"strategy", "tabulate equilibrium controls"},
           {"compare", "LRD vs Markov comparison harness with CSV output"},
           {"verify", "first-order condition and perturbation checks"},
           {"check", "assumption report"}}) {
    app.add_subcommand(name, help)->callback([&which, n = name] { which = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*o_seed) g.overrides["run.seed"] = std::to_string(seed);
  if (*o_out) g.overrides["output.dir"] = out;
  if (*o_paths) {
    g.overrides["run.n_paths"] = std::to_string(paths);
    g.overrides["verify.paths"] = std::to_string(paths);
  }
  if (*o_steps) g.overrides["grid.steps"] = std::to_string(steps);

  ExperimentConfig cfg;
  try {
    cfg = resolve(g);
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << ": " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  log_provenance(cfg);

  try {
    if (which == "simulate") return cmd_simulate(cfg);
    if (which == "strategy") return cmd_strategy(cfg);
    if (which == "compare") return cmd_compare(cfg);
    if (which == "verify") return cmd_verify(cfg);
    if (which == "check") return cmd_check(cfg);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RegimeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
