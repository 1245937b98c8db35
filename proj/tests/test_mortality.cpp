#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "vri/mortality.hpp"

using vri::DiscreteGrid;
using vri::KernelSpec;
using vri::MortalityModel;
using vri::MortalityParams;

namespace {

MortalityParams section5(KernelSpec K = KernelSpec::fractional(1.0, 1.33)) {
  MortalityParams p;
  p.kernel = K;
  return p;
}

double cir_mean(const MortalityParams& p, double t) {
  return p.lambda0 * std::exp(-p.a1 * t) + p.b1 / p.a1 * (1.0 - std::exp(-p.a1 * t));
}

double cir_var(const MortalityParams& p, double t) {
  const double k = p.a1, th = p.b1 / p.a1, s2 = p.sigma * p.sigma, e = std::exp(-k * t);
  return p.lambda0 * s2 / k * (e - e * e) + th * s2 / (2 * k) * (1 - e) * (1 - e);
}

struct Moments {
  double mean, var, se_mean, se_var;
};

Moments terminal_moments(const MortalityModel& m, std::size_t n_paths, std::uint64_t seed) {
  std::vector<double> x(n_paths);
  vri::parallel_for(n_paths, [&](std::size_t p) {
    auto eng = vri::make_engine(seed, vri::Stream::Mortality, p);
    x[p] = m.simulate(eng).lambda.back();
  });
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n_paths;
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= (n_paths - 1);
  m4 /= n_paths;
  return {mean, m2, std::sqrt(m2 / n_paths), std::sqrt((m4 - m2 * m2) / n_paths)};
}

}  // namespace

TEST(Mortality, MarkovLimitMatchesCirMoments) {
  const auto p = section5(KernelSpec::constant(1.0));
  const MortalityModel m(p, DiscreteGrid(0.0, 3.0, 300));
  const auto mo = terminal_moments(m, 20000, 7);
  EXPECT_NEAR(cir_mean(p, 3.0), 0.273224, 1e-6);
  EXPECT_LT(std::abs(mo.mean - cir_mean(p, 3.0)), 3 * mo.se_mean);
  EXPECT_LT(std::abs(mo.var - cir_var(p, 3.0)), 3 * mo.se_var);
}

TEST(Mortality, DeterministicLimitIsOdeSolution) {
  auto p = section5(KernelSpec::constant(1.0));
  p.sigma = 0.0;
  const DiscreteGrid g(0.0, 3.0, 2048);
  const auto path = vri::simulate_path(p, g, 1);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(path.lambda[i], cir_mean(p, g.time(i)), 1e-4);

  // Fractional: the path solves λ = λ0 + K*(b1 - a1 λ), checked with an independent quadrature.
  p.kernel = KernelSpec::fractional(1.0, 1.33);
  const DiscreteGrid g2(0.0, 3.0, 1024);
  const auto q = vri::simulate_path(p, g2, 1);
  const auto w = vri::kernel_weights(p.kernel, g2.dt(), g2.n_steps());
  std::vector<double> drift(g2.size());
  for (std::size_t i = 0; i < g2.size(); ++i) drift[i] = p.b1 - p.a1 * q.lambda[i];
  const auto conv = vri::convolve(w, drift, g2, vri::Quadrature::ProductTrapezoid);
  for (std::size_t i = 0; i < g2.size(); ++i) EXPECT_NEAR(q.lambda[i], p.lambda0 + conv[i], 2e-6);
}

TEST(Mortality, SeedDeterminismAndInvariants) {
  const auto p = section5();
  const DiscreteGrid g(0.0, 3.0, 200);
  const auto a = vri::simulate_path(p, g, 42);
  const auto b = vri::simulate_path(p, g, 42);
  const auto c = vri::simulate_path(p, g, 43);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.dW0, b.dW0);
  EXPECT_NE(a.lambda, c.lambda);
  ASSERT_EQ(a.dW0.size(), g.n_steps());
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_GE(a.lambda[i], 0.0);
    EXPECT_EQ(a.lambda_hat[i], a.lambda[i]);
  }
  double s2 = 0;
  for (double d : a.dW0) s2 += d * d;
  EXPECT_NEAR(s2 / g.n_steps() / g.dt(), 1.0, 0.25);
}

TEST(Mortality, NonnegativeUnderHighVolatility) {
  auto p = section5();
  p.sigma = 1.5;
  p.lambda0 = 0.01;
  const auto path = vri::simulate_path(p, DiscreteGrid(0.0, 3.0, 300), 5);
  bool truncated = false;
  for (std::size_t i = 0; i < path.lambda.size(); ++i) {
    EXPECT_GE(path.lambda[i], 0.0);
    truncated |= path.lambda_raw[i] < 0;
  }
  EXPECT_TRUE(truncated);
}

TEST(Mortality, BaselineShift) {
  auto p = section5();
  p.baseline = vri::Curve::function([](double t) { return 0.01 + 0.002 * t; });
  const auto path = vri::simulate_path(p, DiscreteGrid(0.0, 3.0, 100), 3);
  for (std::size_t i = 0; i < path.lambda.size(); ++i)
    EXPECT_DOUBLE_EQ(path.lambda_hat[i], path.lambda[i] + 0.01 + 0.002 * path.grid.time(i));
}

TEST(Mortality, ThreadCountDoesNotChangeResults) {
  const MortalityModel m(section5(), DiscreteGrid(0.0, 3.0, 100));
  setenv("VOLTERRA_RI_THREADS", "1", 1);
  const double one = vri::moment_bound_probe(m, 2.0, 500, 9);
  setenv("VOLTERRA_RI_THREADS", "4", 1);
  const double four = vri::moment_bound_probe(m, 2.0, 500, 9);
  unsetenv("VOLTERRA_RI_THREADS");
  EXPECT_EQ(one, four);
}

TEST(ConditionalMean, MarkovExample) {
  const MortalityModel m(section5(KernelSpec::constant(1.0)), DiscreteGrid(0.0, 3.0, 300));
  const auto path = m.simulate(1);
  const double expected = 0.18 * std::exp(-0.5) + 0.3 * (1 - std::exp(-0.5));
  EXPECT_NEAR(expected, 0.22721, 1e-5);
  EXPECT_NEAR(m.conditional_mean(path, 0, 1.0), expected, 1e-14);
}

TEST(ConditionalMean, ReproducesMarkovFormulaEverywhere) {
  const auto p = section5(KernelSpec::constant(1.0));
  const DiscreteGrid g(0.0, 3.0, 63);
  const MortalityModel m(p, g);
  const auto path = m.simulate(11);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t k = i; k < g.size(); ++k)
      worst = std::max(worst, std::abs(m.conditional_mean(path, i, g.time(k)) -
                                       vri::markov_conditional_mean(p, path.lambda[i], g.time(i), g.time(k))));
  EXPECT_LT(worst, 1e-12);
  // Off-grid targets go through the closed-form integrated resolvent.
  EXPECT_NEAR(m.conditional_mean(path, 20, 2.1234),
              vri::markov_conditional_mean(p, path.lambda[20], g.time(20), 2.1234), 1e-12);
}

TEST(ConditionalMean, PresentAndErrors) {
  const DiscreteGrid g(-2.0, 3.0, 250);
  const MortalityModel m(section5(), g);
  const auto path = m.simulate(3);
  for (std::size_t i : {0, 17, 100, 250}) EXPECT_NEAR(m.conditional_mean(path, i, g.time(i)), path.lambda_hat[i], 1e-14);
  EXPECT_THROW(m.conditional_mean(path, 100, g.time(99)), vri::DomainError);
  EXPECT_THROW(m.conditional_mean(path, 100, 3.5), vri::ResolutionError);
}

TEST(ConditionalMean, OffGridContinuity) {
  const DiscreteGrid g(0.0, 3.0, 300);
  const MortalityModel m(section5(), g);
  const auto path = m.simulate(8);
  EXPECT_NEAR(m.conditional_mean(path, 100, 2.0 + 1e-9), m.conditional_mean(path, 100, 2.0), 1e-8);
}

TEST(ConditionalMean, DeterministicVolterraIgnoresHistory) {
  auto p = section5();
  p.sigma = 0.0;
  const DiscreteGrid g(0.0, 3.0, 300);
  const MortalityModel m(p, g);
  const auto path = m.simulate(4);
  for (std::size_t i : {0, 50, 150})
    for (std::size_t k : {150, 220, 300}) EXPECT_DOUBLE_EQ(m.conditional_mean(path, i, g.time(k)), m.deterministic(k));
}

TEST(ConditionalMean, TowerProperty) {
  const DiscreteGrid g(0.0, 3.0, 150);
  const MortalityModel m(section5(), g);
  const std::size_t n_paths = 4000, k = 150;
  for (std::size_t i : {50, 100}) {
    std::vector<double> v(n_paths);
    vri::parallel_for(n_paths, [&](std::size_t p) {
      auto eng = vri::make_engine(21, vri::Stream::Mortality, p);
      v[p] = m.conditional_mean(m.simulate(eng), i, g.time(k));
    });
    double mean = 0, var = 0;
    for (double x : v) mean += x;
    mean /= n_paths;
    for (double x : v) var += (x - mean) * (x - mean);
    const double se = std::sqrt(var / (n_paths - 1) / n_paths);
    EXPECT_LT(std::abs(mean - m.deterministic(k)), 3 * se);
  }
}

TEST(ForwardCurve, TrackerMatchesDirectEvaluation) {
  const DiscreteGrid g(-1.0, 2.0, 120);
  const MortalityModel m(section5(), g);
  const auto path = m.simulate(6);
  vri::ForwardCurveTracker tr(m, path, 40);
  for (std::size_t i = 40; i < 120; ++i) {
    for (std::size_t k = i; k <= 120; k += 7) EXPECT_NEAR(tr.mean_hat(k), m.conditional_mean(path, i, g.time(k)), 1e-13);
    tr.advance();
  }
  EXPECT_THROW(tr.lambda_mean(10), vri::DomainError);
}

TEST(ForwardCurve, ContinuationKeepsPrefix) {
  const DiscreteGrid g(0.0, 3.0, 90);
  const MortalityModel m(section5(), g);
  const auto path = m.simulate(2);
  const auto h = m.forward_curve(path, 30);
  vri::Engine eng(99);
  const auto cont = m.continue_path(path, 30, h, eng);
  for (std::size_t i = 0; i <= 30; ++i) EXPECT_EQ(cont.lambda[i], path.lambda[i]);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(cont.dW0[i], path.dW0[i]);
  EXPECT_NE(cont.lambda[60], path.lambda[60]);
  // continuing from 0 with the deterministic curve is a fresh simulation
  vri::Engine e1(5), e2(5);
  const auto fresh = m.simulate(e1);
  const auto again = m.continue_path(fresh, 0, m.forward_curve(fresh, 0), e2);
  EXPECT_EQ(fresh.lambda, again.lambda);
}

TEST(MomentProbe, DeterministicAndCir) {
  auto p = section5(KernelSpec::constant(1.0));
  const DiscreteGrid g(0.0, 3.0, 150);
  {
    auto q = p;
    q.sigma = 0.0;
    const MortalityModel m(q, g);
    double sup = 0;
    for (std::size_t k = 0; k < g.size(); ++k) sup = std::max(sup, std::pow(m.deterministic(k), 3.0));
    EXPECT_NEAR(vri::moment_bound_probe(m, 3.0, 3, 1), sup, 1e-14);
  }
  const MortalityModel m(p, g);
  // mean is increasing towards b1/a1 so the sup is at T
  const double second = cir_var(p, 3.0) + cir_mean(p, 3.0) * cir_mean(p, 3.0);
  const double est = vri::moment_bound_probe(m, 2.0, 20000, 3);
  EXPECT_NEAR(est, second, 3 * 0.0003);
  const double lrd1 = vri::moment_bound_probe(MortalityModel(section5(), g), 2.0, 10000, 4);
  const double lrd2 = vri::moment_bound_probe(MortalityModel(section5(), g), 2.0, 20000, 4);
  EXPECT_NEAR(lrd2 / lrd1, 1.0, 0.05);
  EXPECT_THROW(vri::moment_bound_probe(m, 1.0, 10, 1), vri::ParameterError);
}
