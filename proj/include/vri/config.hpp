#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "kernel.hpp"
#include "market.hpp"
#include "mortality.hpp"
#include "objective.hpp"
#include "strategies.hpp"

namespace vri {

struct ClaimSpec {
  ClaimFamily family = ClaimFamily::Gamma;
  double mean = 1.0;
  double second_moment = 1.2;
  std::optional<double> z_max;

  ClaimModel model() const { return moment_fit(family, mean, second_moment, z_max); }
};

struct ExperimentConfig {
  MortalityParams mortality;
  double history_start = -20.0;  // years before t = 0
  MarketParams market;
  ClaimSpec claims;
  RiskAversion risk{1.0, 0.0};
  std::vector<double> phi1_sweep{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  double x0 = 10.0;
  double horizon = 3.0;
  double dt = 0.01;
  std::size_t n_paths = 1;
  std::uint64_t seed = 42;
  std::string out_dir = "results";
  bool history_ablation = false;
  ControlConstraint constraint = ControlConstraint::NonNegative;
  double constant_phi2 = 1.0;  // risk aversion for the constant-regime sub-run
  std::size_t verify_paths = 10000;
  PerturbationMode verify_mode = PerturbationMode::OpenLoop;

  std::vector<std::string> provenance;  // one "key = value  # source" line per key
  bool all_default = true;

  std::size_t control_steps() const { return static_cast<std::size_t>(std::llround(horizon / dt)); }
  std::size_t history_steps() const { return static_cast<std::size_t>(std::llround(-history_start / dt)); }
  DiscreteGrid mortality_grid() const {
    return DiscreteGrid::with_step(-static_cast<double>(history_steps()) * dt, dt, history_steps() + control_steps());
  }
  std::size_t control_offset() const { return history_steps(); }
  ClaimModel claim_model() const { return claims.model(); }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v, const std::string& key, std::size_t line) {
  double x = 0;
  const char* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x))
    throw ConfigError(key + ": expected a number, got '" + v + "'", line, key);
  return x;
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& key, std::size_t line) {
  std::uint64_t x = 0;
  const char* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'", line, key);
  return x;
}

inline bool parse_bool(const std::string& v, const std::string& key, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'", line, key);
}

inline std::vector<double> parse_list(const std::string& v, const std::string& key, std::size_t line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), key, line));
  return out;
}

inline std::string fmt(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct KernelFields {
  std::string family = "fractional";
  double c = 1.0, alpha = 1.33, decay = 0.0;
};

}  // namespace config_detail

// Flat `section.key = value` grammar; see docs/config.md. `overrides` are applied
// after the file and take precedence; the pseudo-key grid.steps sets
// grid.dt = grid.horizon / steps.
inline ExperimentConfig parse_config(std::istream& in, const std::map<std::string, std::string>& overrides = {}) {
  using namespace config_detail;
  ExperimentConfig cfg;
  KernelFields kf;
  double r = 0.05, mu = 0.07, sig = 0.2, baseline = 0.0;
  std::string claim_family = "gamma";
  std::string constraint = "nonnegative", verify_mode = "open_loop";

  using Setter = std::function<void(const std::string&, std::size_t)>;
  struct Entry {
    Setter set;
    std::function<std::string()> show;
  };
  std::map<std::string, Entry> keys;
  const auto num = [&](const char* k, double& ref) {
    keys[k] = {[&ref, k = std::string(k)](const std::string& v, std::size_t l) { ref = parse_double(v, k, l); },
               [&ref] { return fmt(ref); }};
  };
  num("mortality.lambda0", cfg.mortality.lambda0);
  num("mortality.b1", cfg.mortality.b1);
  num("mortality.a1", cfg.mortality.a1);
  num("mortality.sigma", cfg.mortality.sigma);
  num("mortality.baseline", baseline);
  keys["mortality.kernel"] = {[&](const std::string& v, std::size_t) { kf.family = v; }, [&] { return kf.family; }};
  num("mortality.kernel_c", kf.c);
  num("mortality.alpha", kf.alpha);
  num("mortality.decay", kf.decay);
  num("mortality.history_start", cfg.history_start);
  num("market.r", r);
  num("market.mu", mu);
  num("market.sigma", sig);
  num("market.theta", cfg.market.theta);
  num("market.eta", cfg.market.eta);
  num("market.k1", cfg.market.k1);
  keys["claims.family"] = {[&](const std::string& v, std::size_t) { claim_family = v; }, [&] { return claim_family; }};
  num("claims.mean", cfg.claims.mean);
  num("claims.second_moment", cfg.claims.second_moment);
  keys["claims.z_max"] = {
      [&](const std::string& v, std::size_t l) { cfg.claims.z_max = parse_double(v, "claims.z_max", l); },
      [&] { return cfg.claims.z_max ? fmt(*cfg.claims.z_max) : std::string("none"); }};
  num("risk.phi1", cfg.risk.phi1);
  num("risk.phi2", cfg.risk.phi2);
  keys["risk.phi1_sweep"] = {[&](const std::string& v, std::size_t l) { cfg.phi1_sweep = parse_list(v, "risk.phi1_sweep", l); },
                             [&] {
                               std::string s;
                               for (std::size_t i = 0; i < cfg.phi1_sweep.size(); ++i)
                                 s += (i ? ", " : "") + fmt(cfg.phi1_sweep[i]);
                               return s;
                             }};
  num("risk.constant_phi2", cfg.constant_phi2);
  num("wealth.x0", cfg.x0);
  num("grid.horizon", cfg.horizon);
  num("grid.dt", cfg.dt);
  keys["run.n_paths"] = {[&](const std::string& v, std::size_t l) { cfg.n_paths = parse_uint(v, "run.n_paths", l); },
                         [&] { return std::to_string(cfg.n_paths); }};
  keys["run.seed"] = {[&](const std::string& v, std::size_t l) { cfg.seed = parse_uint(v, "run.seed", l); },
                      [&] { return std::to_string(cfg.seed); }};
  keys["output.dir"] = {[&](const std::string& v, std::size_t) { cfg.out_dir = v; }, [&] { return cfg.out_dir; }};
  keys["comparison.history_ablation"] = {
      [&](const std::string& v, std::size_t l) { cfg.history_ablation = parse_bool(v, "comparison.history_ablation", l); },
      [&] { return std::string(cfg.history_ablation ? "true" : "false"); }};
  keys["strategy.constraint"] = {[&](const std::string& v, std::size_t) { constraint = v; }, [&] { return constraint; }};
  keys["verify.paths"] = {[&](const std::string& v, std::size_t l) { cfg.verify_paths = parse_uint(v, "verify.paths", l); },
                          [&] { return std::to_string(cfg.verify_paths); }};
  keys["verify.mode"] = {[&](const std::string& v, std::size_t) { verify_mode = v; }, [&] { return verify_mode; }};

  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'section.key = value'", line);
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("unknown key '" + key + "'", line, key);
    if (seen.count(key)) throw ConfigError("duplicate key '" + key + "'", line, key);
    if (value.empty()) throw ConfigError(key + ": missing value", line, key);
    it->second.set(value, line);
    seen[key] = line;
  }

  std::map<std::string, bool> from_cli;
  std::optional<std::uint64_t> steps;
  for (const auto& [key, value] : overrides) {
    if (key == "grid.steps") {
      steps = parse_uint(value, "--steps", 0);
      if (*steps == 0) throw ConfigError("--steps must be positive", 0, "grid.steps");
      continue;
    }
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("unknown key '" + key + "'", 0, key);
    it->second.set(value, 0);
    from_cli[key] = true;
  }
  if (steps) {
    cfg.dt = cfg.horizon / static_cast<double>(*steps);
    from_cli["grid.dt"] = true;
  }

  const auto field = [&](const std::string& k) { return seen.count(k) ? seen[k] : std::size_t{0}; };
  const auto fail = [&](const std::string& k, const std::string& msg) { throw ConfigError(msg, field(k), k); };

  if (kf.family == "fractional") {
    if (kf.decay != 0.0) fail("mortality.decay", "mortality.decay must be 0 for the fractional kernel");
  } else if (kf.family == "constant") {
    if (kf.alpha != 1.0 && seen.count("mortality.alpha")) fail("mortality.alpha", "mortality.alpha must be 1 for the constant kernel");
  } else if (kf.family != "exponential" && kf.family != "gamma") {
    fail("mortality.kernel", "mortality.kernel must be constant, fractional, exponential or gamma");
  }
  try {
    if (kf.family == "fractional") cfg.mortality.kernel = KernelSpec::fractional(kf.c, kf.alpha);
    else if (kf.family == "constant") cfg.mortality.kernel = KernelSpec::constant(kf.c);
    else if (kf.family == "exponential") cfg.mortality.kernel = KernelSpec::exponential(kf.c, kf.decay);
    else cfg.mortality.kernel = KernelSpec::gamma(kf.c, kf.alpha, kf.decay);
  } catch (const ParameterError& e) {
    fail("mortality.kernel", e.what());
  }
  cfg.mortality.baseline = Curve::constant(baseline);
  if (baseline < 0) fail("mortality.baseline", "mortality.baseline must be nonnegative");
  for (const char* k : {"mortality.lambda0", "mortality.b1", "mortality.a1"}) {
    const double v = k == std::string("mortality.lambda0") ? cfg.mortality.lambda0
                     : k == std::string("mortality.b1")    ? cfg.mortality.b1
                                                            : cfg.mortality.a1;
    if (!(v > 0)) fail(k, std::string(k) + " must be positive");
  }
  if (!(cfg.mortality.sigma >= 0)) fail("mortality.sigma", "mortality.sigma must be nonnegative");

  if (!(cfg.dt > 0)) fail("grid.dt", "grid.dt must be positive");
  if (!(cfg.horizon > 0)) fail("grid.horizon", "grid.horizon must be positive");
  if (std::abs(cfg.horizon / cfg.dt - std::round(cfg.horizon / cfg.dt)) > 1e-9)
    fail("grid.dt", "grid.horizon must be a whole number of grid.dt steps");
  if (cfg.history_start > 0) fail("mortality.history_start", "mortality.history_start must be <= 0");
  if (std::abs(cfg.history_start / cfg.dt - std::round(cfg.history_start / cfg.dt)) > 1e-9)
    fail("mortality.history_start", "mortality.history_start must be a whole number of grid.dt steps");

  cfg.market.r = Curve::constant(r);
  cfg.market.mu = Curve::constant(mu);
  cfg.market.sigma = Curve::constant(sig);
  if (!(sig > 0)) fail("market.sigma", "market.sigma must be positive");
  if (!(r >= 0)) fail("market.r", "market.r must be nonnegative");
  if (!(cfg.market.theta >= 0)) fail("market.theta", "market.theta must be nonnegative");
  if (!(cfg.market.eta >= cfg.market.theta)) fail("market.eta", "market.eta must be at least market.theta");
  if (!(cfg.market.k1 >= 0)) fail("market.k1", "market.k1 must be nonnegative");

  if (claim_family == "exponential") cfg.claims.family = ClaimFamily::Exponential;
  else if (claim_family == "gamma") cfg.claims.family = ClaimFamily::Gamma;
  else if (claim_family == "lognormal") cfg.claims.family = ClaimFamily::Lognormal;
  else if (claim_family == "bounded_uniform") cfg.claims.family = ClaimFamily::BoundedUniform;
  else fail("claims.family", "claims.family must be exponential, gamma, lognormal or bounded_uniform");
  try {
    (void)cfg.claims.model();
  } catch (const FitError& e) {
    fail(seen.count("claims.z_max") ? "claims.z_max" : "claims.second_moment", e.what());
  }

  if (!(cfg.risk.phi1 >= 0)) fail("risk.phi1", "risk.phi1 must be nonnegative");
  if (!(cfg.risk.phi2 >= 0)) fail("risk.phi2", "risk.phi2 must be nonnegative");
  if (cfg.risk.phi1 > 0 && cfg.risk.phi2 > 0)
    fail("risk.phi2", "risk.phi1 and risk.phi2 are both positive: mixed risk aversion is not supported");
  if (cfg.risk.phi1 == 0 && cfg.risk.phi2 == 0) fail("risk.phi1", "one of risk.phi1, risk.phi2 must be positive");
  if (cfg.phi1_sweep.empty()) fail("risk.phi1_sweep", "risk.phi1_sweep must not be empty");
  for (double p : cfg.phi1_sweep)
    if (!(p > 0)) fail("risk.phi1_sweep", "risk.phi1_sweep entries must be positive");
  if (!(cfg.constant_phi2 > 0)) fail("risk.constant_phi2", "risk.constant_phi2 must be positive");
  if (std::abs(cfg.market.theta - cfg.market.eta) > 1e-12)
    fail("market.theta", "the state-dependent strategy needs market.theta = market.eta");
  if (!(cfg.x0 > 0)) fail("wealth.x0", "wealth.x0 must be positive");
  if (cfg.n_paths < 1) fail("run.n_paths", "run.n_paths must be at least 1");
  if (cfg.verify_paths < 2) fail("verify.paths", "verify.paths must be at least 2");

  if (constraint == "nonnegative") cfg.constraint = ControlConstraint::NonNegative;
  else if (constraint == "unit_interval") cfg.constraint = ControlConstraint::UnitInterval;
  else fail("strategy.constraint", "strategy.constraint must be nonnegative or unit_interval");
  if (verify_mode == "open_loop") cfg.verify_mode = PerturbationMode::OpenLoop;
  else if (verify_mode == "closed_loop") cfg.verify_mode = PerturbationMode::ClosedLoop;
  else fail("verify.mode", "verify.mode must be open_loop or closed_loop");

  cfg.all_default = seen.empty() && from_cli.empty();
  for (const auto& [k, e] : keys) {
    const auto it = seen.find(k);
    const std::string source = from_cli.count(k)   ? std::string("command line")
                               : it == seen.end() ? std::string("default")
                                                  : "line " + std::to_string(it->second);
    cfg.provenance.push_back(k + " = " + e.show() + "  # " + source);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const std::map<std::string, std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  return parse_config(in, overrides);
}

inline ExperimentConfig default_config() {
  std::istringstream empty;
  return parse_config(empty);
}

// Resolved key = value lines, sorted by key; the input to the config hash.
// The output directory does not affect results and is left out.
inline std::string canonical_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& line : cfg.provenance) {
    if (line.rfind("output.dir", 0) == 0) continue;
    out += line.substr(0, line.find("  # ")) + "\n";
  }
  return out;
}

}  // namespace vri
