#include <gtest/gtest.h>

#include <sstream>

#include "vri/config.hpp"

using namespace vri;

namespace {

ExperimentConfig parse(const std::string& text, const std::map<std::string, std::string>& ov = {}) {
  std::istringstream in(text);
  return parse_config(in, ov);
}

ConfigError parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError("none", 0, "");
}

}  // namespace

TEST(Config, ShippedFileMatchesNumericalExample) {
  const auto cfg = load_config(VRI_SOURCE_DIR "/configs/section5.cfg");
  const auto& m = cfg.mortality;
  EXPECT_EQ(m.kernel.family(), KernelFamily::Fractional);
  EXPECT_DOUBLE_EQ(m.kernel.c(), 1.0);
  EXPECT_DOUBLE_EQ(m.kernel.alpha(), 1.33);
  EXPECT_DOUBLE_EQ(m.lambda0, 0.18);
  EXPECT_DOUBLE_EQ(m.b1, 0.15);
  EXPECT_DOUBLE_EQ(m.a1, 0.5);
  EXPECT_DOUBLE_EQ(m.sigma, 0.1);
  EXPECT_DOUBLE_EQ(m.baseline(1.7), 0.0);
  EXPECT_DOUBLE_EQ(cfg.history_start, -20.0);
  EXPECT_DOUBLE_EQ(cfg.horizon, 3.0);

  EXPECT_DOUBLE_EQ(cfg.market.k1, 10.0);
  EXPECT_DOUBLE_EQ(cfg.market.r(0.0), 0.05);
  EXPECT_DOUBLE_EQ(cfg.market.mu(2.0), 0.07);
  EXPECT_DOUBLE_EQ(cfg.market.sigma(1.0), 0.2);
  EXPECT_DOUBLE_EQ(cfg.market.eta, 0.2);
  EXPECT_DOUBLE_EQ(cfg.claims.mean, 1.0);
  EXPECT_DOUBLE_EQ(cfg.claims.second_moment, 1.2);
  EXPECT_DOUBLE_EQ(cfg.x0, 10.0);
  EXPECT_DOUBLE_EQ(cfg.risk.phi1, 1.0);
  EXPECT_DOUBLE_EQ(cfg.risk.phi2, 0.0);
  EXPECT_EQ(cfg.phi1_sweep, (std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9, 1.0}));
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_FALSE(cfg.all_default);
}

TEST(Config, ShippedFileHashesLikeDefaults) {
  // Every value in the shipped file is also the built-in default.
  const auto shipped = load_config(VRI_SOURCE_DIR "/configs/section5.cfg");
  EXPECT_EQ(canonical_text(shipped), canonical_text(default_config()));
}

TEST(Config, EmptyFileIsAllDefault) {
  const auto cfg = parse("# only a comment\n\n   \n");
  EXPECT_TRUE(cfg.all_default);
  for (const auto& line : cfg.provenance) EXPECT_NE(line.find("# default"), std::string::npos) << line;
  EXPECT_EQ(cfg.control_steps(), 300u);
  EXPECT_EQ(cfg.history_steps(), 2000u);
  EXPECT_EQ(cfg.control_offset(), 2000u);
}

TEST(Config, ProvenanceRecordsSourceLine) {
  const auto cfg = parse("\nmarket.k1 = 8\n", {{"run.seed", "7"}});
  EXPECT_DOUBLE_EQ(cfg.market.k1, 8.0);
  EXPECT_EQ(cfg.seed, 7u);
  bool k1 = false, seed = false;
  for (const auto& line : cfg.provenance) {
    if (line == "market.k1 = 8  # line 2") k1 = true;
    if (line == "run.seed = 7  # command line") seed = true;
  }
  EXPECT_TRUE(k1);
  EXPECT_TRUE(seed);
  EXPECT_FALSE(cfg.all_default);
}

TEST(Config, MixedRegimeRejectedWithField) {
  const auto e = parse_error("risk.phi1 = 1\nrisk.phi2 = 0.5\n");
  EXPECT_EQ(e.field(), "risk.phi2");
  EXPECT_EQ(e.line(), 2u);
}

TEST(Config, UnknownKeyReportsLine) {
  const auto e = parse_error("market.r = 0.05\n\n# x\nmarket.rr = 1\n");
  EXPECT_EQ(e.line(), 4u);
  EXPECT_EQ(e.field(), "market.rr");
}

TEST(Config, DuplicateAndMalformedLines) {
  EXPECT_EQ(parse_error("market.k1 = 1\nmarket.k1 = 2\n").line(), 2u);
  EXPECT_EQ(parse_error("market.k1 1\n").line(), 1u);
  const auto e = parse_error("market.k1 = ten\n");
  EXPECT_EQ(e.field(), "market.k1");
  EXPECT_EQ(parse_error("market.k1 =\n").field(), "market.k1");
}

TEST(Config, FieldValidation) {
  EXPECT_EQ(parse_error("market.sigma = 0\n").field(), "market.sigma");
  EXPECT_EQ(parse_error("market.theta = 0.1\n").field(), "market.theta");
  EXPECT_EQ(parse_error("claims.second_moment = 0.5\n").field(), "claims.second_moment");
  EXPECT_EQ(parse_error("grid.dt = 0.007\n").field(), "grid.dt");
  EXPECT_EQ(parse_error("mortality.kernel = wavelet\n").field(), "mortality.kernel");
  EXPECT_EQ(parse_error("strategy.constraint = box\n").field(), "strategy.constraint");
  EXPECT_EQ(parse_error("risk.phi1 = 0\n").field(), "risk.phi1");
}

TEST(Config, ConstantRegime) {
  const auto cfg = parse("risk.phi1 = 0\nrisk.phi2 = 1\n");
  EXPECT_EQ(cfg.risk.regime(), Regime::Constant);
  // The comparison still runs the state-dependent sweep, so the loadings must match.
  EXPECT_EQ(parse_error("risk.phi1 = 0\nrisk.phi2 = 1\nmarket.theta = 0.1\n").field(), "market.theta");
}

TEST(Config, StepsOverrideSetsDt) {
  const auto cfg = parse("", {{"grid.steps", "150"}});
  EXPECT_DOUBLE_EQ(cfg.dt, 0.02);
  EXPECT_EQ(cfg.control_steps(), 150u);
  EXPECT_EQ(cfg.history_steps(), 1000u);
  EXPECT_THROW(parse("", {{"grid.steps", "0"}}), ConfigError);
}

TEST(Config, OutputDirDoesNotChangeHash) {
  EXPECT_EQ(canonical_text(parse("output.dir = a\n")), canonical_text(parse("output.dir = b\n")));
  EXPECT_NE(canonical_text(parse("run.seed = 1\n")), canonical_text(parse("run.seed = 2\n")));
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(load_config("/nonexistent/x.cfg"), IoError); }
