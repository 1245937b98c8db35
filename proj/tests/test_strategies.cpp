#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "vri/strategies.hpp"

using namespace vri;

namespace {

ClaimModel sec5_claims() { return moment_fit(ClaimFamily::Gamma, 1.0, 1.2); }

MortalityParams with_kernel(KernelSpec k) {
  MortalityParams p;
  p.kernel = k;
  return p;
}

// Hand-coded Markov conditional mean, baseline zero.
double cir_mean(double a1, double b1, double lt, double tau) {
  return lt * std::exp(-a1 * tau) + b1 / a1 * (1.0 - std::exp(-a1 * tau));
}

}  // namespace

TEST(ConstantRegime, TerminalValues) {
  MarketParams m;
  const DiscreteGrid g(0.0, 3.0, 300);
  const auto s = constant_ra_strategy(m, sec5_claims(), {0.0, 1.0}, g);
  EXPECT_NEAR(s.pi.back(), 0.5, 1e-12);
  EXPECT_NEAR(s.a.back(), 0.2 / 1.2, 1e-12);
  EXPECT_NEAR(s.pi[200], 0.5 * std::exp(-0.05), 1e-12);
  EXPECT_NEAR(s.a[200], 0.2 / 1.2 * std::exp(-0.05), 1e-12);
  EXPECT_EQ(s.regime, Regime::Constant);
}

TEST(ConstantRegime, ZeroPhi2GivesZero) {
  MarketParams m;
  const auto s = constant_ra_strategy(m, sec5_claims(), {0.0, 0.0}, DiscreteGrid(0.0, 3.0, 30));
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    EXPECT_EQ(s.pi[i], 0.0);
    EXPECT_EQ(s.a[i], 0.0);
  }
}

TEST(ConstantRegime, RejectsOtherRegimes) {
  MarketParams m;
  const DiscreteGrid g(0.0, 3.0, 30);
  EXPECT_THROW(constant_ra_strategy(m, sec5_claims(), {1.0, 0.0}, g), RegimeError);
  EXPECT_THROW(constant_ra_strategy(m, sec5_claims(), {1.0, 1.0}, g), RegimeError);
  EXPECT_THROW((RiskAversion{-1.0, 0.0}.validate()), ParameterError);
}

TEST(ConstantRegime, IgnoresMortality) {
  MarketParams m;
  const DiscreteGrid g(0.0, 3.0, 300);
  const auto a = constant_ra_strategy(m, sec5_claims(), {0.0, 1.0}, g);
  const auto b = constant_ra_strategy(m, moment_fit(ClaimFamily::Lognormal, 1.0, 1.2), {0.0, 1.0}, g);
  EXPECT_EQ(a.pi, b.pi);
  EXPECT_EQ(a.a, b.a);
}

TEST(ConstrainedRegime, Projection) {
  MarketParams m;
  const DiscreteGrid g(0.0, 3.0, 300);
  const auto c1 = constrained_ra_strategy(m, sec5_claims(), {0.0, 1.0}, g);
  EXPECT_NEAR(c1.a.back(), 0.2 / 1.2, 1e-12);
  const auto c10 = constrained_ra_strategy(m, sec5_claims(), {0.0, 10.0}, g);
  EXPECT_EQ(c10.a.back(), 1.0);
  EXPECT_NEAR(c10.pi.back(), 5.0, 1e-12);
  EXPECT_EQ(c10.constraint, ControlConstraint::UnitInterval);
  EXPECT_EQ(project_unit_interval(-0.3), 0.0);
  EXPECT_EQ(project_unit_interval(1.7), 1.0);
}

TEST(ConstrainedRegime, IdempotentOverRandomDraws) {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const DiscreteGrid g(0.0, 3.0, 30);
  for (int d = 0; d < 1000; ++d) {
    MarketParams m;
    m.eta = 2.0 * u(eng);
    m.r = Curve::constant(0.1 * u(eng));
    const double mz = 0.1 + 2 * u(eng);
    const auto z = moment_fit(ClaimFamily::Gamma, mz, mz * mz * (1.01 + u(eng)));
    const auto once = constrained_ra_strategy(m, z, {0.0, 20.0 * u(eng)}, g);
    const auto twice = project(once);
    EXPECT_EQ(once.a, twice.a);
    for (double a : once.a) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  }
}

class MFactorFixture : public ::testing::Test {
 protected:
  MarketParams m;
  ClaimModel z = sec5_claims();
  RiskAversion risk{1.0, 0.0};
};

TEST_F(MFactorFixture, TerminalIsOne) {
  const MortalityModel model(with_kernel(KernelSpec::fractional(1.0, 1.33)), DiscreteGrid(0.0, 3.0, 300));
  const auto path = model.simulate(3);
  const auto f = m_factor(m, z, model, path, risk, 3.0);
  EXPECT_EQ(f.M, 1.0);
  EXPECT_EQ(f.gamma1, 1.0);
}

TEST_F(MFactorFixture, DegenerateMarketGivesOne) {
  m.r = Curve::constant(0.0);
  m.mu = Curve::constant(0.0);
  m.eta = m.theta = 0.0;
  const MortalityModel model(with_kernel(KernelSpec::fractional(1.0, 1.33)), DiscreteGrid(0.0, 3.0, 300));
  const auto path = model.simulate(3);
  for (double t : {0.0, 1.0, 2.5}) EXPECT_EQ(m_factor(m, z, model, path, risk, t).M, 1.0);
}

TEST_F(MFactorFixture, MarkovMatchesIndependentQuadrature) {
  const auto mp = with_kernel(KernelSpec::constant());
  const MortalityModel model(mp, DiscreteGrid(0.0, 3.0, 300));
  const auto path = model.simulate(11);
  const double l0 = path.lambda[0];
  const auto f = m_factor(m, z, model, path, risk, 0.0, ExpectationModel::Markov);
  const auto integrand = [&](double s) {
    const double gamma = std::exp(0.05 * (3.0 - s));
    return std::exp(0.1 * s) * (0.01 + 0.04 * 10.0 / 1.2 * cir_mean(0.5, 0.15, l0, s)) * gamma;
  };
  const double oracle = std::exp(0.3) + boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 3.0);
  EXPECT_NEAR(f.M, oracle, 1e-6);
  EXPECT_GE(f.M, 1.0);
}

TEST_F(MFactorFixture, VolterraMatchesRefinedQuadrature) {
  const MortalityModel model(with_kernel(KernelSpec::fractional(1.0, 1.33)), DiscreteGrid(-2.0, 3.0, 500));
  const auto path = model.simulate(5);
  const std::size_t m0 = model.grid().index_of(0.0);
  const auto f = m_factor(m, z, model, path, risk, 0.0, ExpectationModel::Volterra, m0);
  const std::size_t n = 4 * 300;
  const double h = 3.0 / n;
  double acc = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = k * h;
    const double v = std::exp(0.1 * s) * (0.01 + 0.04 * 10.0 / 1.2 * model.conditional_mean(path, m0, s)) *
                     std::exp(0.05 * (3.0 - s));
    acc += (k == 0 || k == n ? 0.5 : 1.0) * v * h;
  }
  EXPECT_NEAR(f.M, std::exp(0.3) + acc, 1e-6);
}

TEST_F(MFactorFixture, PathSweepMatchesPointwise) {
  const MortalityModel model(with_kernel(KernelSpec::fractional(1.0, 1.33)), DiscreteGrid(-1.0, 3.0, 400));
  const auto path = model.simulate(9);
  const std::size_t off = model.grid().index_of(0.0);
  const MFactorCalculator calc(m, z, risk, control_grid(model, off));
  const auto M = m_factor_path(calc, ConditionalMeanSweep(model, ExpectationModel::Volterra, path, off), off);
  ASSERT_EQ(M.size(), 301u);
  EXPECT_EQ(M.back(), 1.0);
  for (std::size_t i : {0u, 57u, 150u, 299u}) {
    const auto f = m_factor(m, z, model, path, risk, model.grid().time(off + i), ExpectationModel::Volterra, off);
    EXPECT_NEAR(M[i], f.M, 1e-12);
  }
  for (double v : M) EXPECT_GE(v, 1.0);
}

TEST_F(MFactorFixture, RequiresCheapReinsurance) {
  m.theta = 0.1;
  EXPECT_THROW(MFactorCalculator(m, z, risk, DiscreteGrid(0.0, 3.0, 30)), ParameterError);
  m.theta = 0.2;
  EXPECT_THROW(MFactorCalculator(m, z, RiskAversion{0.0, 1.0}, DiscreteGrid(0.0, 3.0, 30)), RegimeError);
}

TEST_F(MFactorFixture, StateDependentControls) {
  const auto c = state_dependent_control(m, z, 1.0, 1.0, 10.0, 3.0);
  EXPECT_NEAR(c.pi, 5.0, 1e-12);
  EXPECT_NEAR(c.a, 2.0 / 1.2, 1e-12);
  const auto zero = state_dependent_control(m, z, 1.3, 1.1, 0.0, 1.0);
  EXPECT_EQ(zero.pi, 0.0);
  EXPECT_EQ(zero.a, 0.0);
  EXPECT_THROW(state_dependent_control(m, z, 0.9, 1.0, 1.0, 1.0), ConsistencyError);
}

TEST_F(MFactorFixture, StateDependentBoundAndPhiScaling) {
  const MortalityModel model(with_kernel(KernelSpec::fractional(1.0, 1.33)), DiscreteGrid(0.0, 3.0, 300));
  const auto path = model.simulate(21);
  const double X = 10.0;
  const auto c1 = state_dependent_strategy(m, z, model, path, {1.0, 0.0}, X, 0.0);
  const auto c2 = state_dependent_strategy(m, z, model, path, {2.0, 0.0}, X, 0.0);
  EXPECT_GT(c1.a, 0.0);
  EXPECT_LE(c1.a, 0.2 / 1.2 * 1.0 * X);
  EXPECT_GT(std::abs(c2.a - 2.0 * c1.a), 1e-6);
}

TEST_F(MFactorFixture, KernelChangesStrategyWhenMeansDiffer) {
  const DiscreteGrid g(-2.0, 3.0, 500);
  const MortalityModel lrd(with_kernel(KernelSpec::fractional(1.0, 1.33)), g);
  const auto path = lrd.simulate(4);
  const MortalityModel markov(with_kernel(KernelSpec::constant()), g);
  const std::size_t m0 = g.index_of(0.0);
  const double diff = lrd.conditional_mean(path, m0, 2.0) -
                      markov_conditional_mean(markov.params(), path.lambda[m0], 0.0, 2.0);
  ASSERT_GT(std::abs(diff), 1e-6);
  const auto a = state_dependent_strategy(m, z, lrd, path, risk, 10.0, 0.0, ExpectationModel::Volterra, m0);
  const auto b = state_dependent_strategy(m, z, lrd, path, risk, 10.0, 0.0, ExpectationModel::Markov, m0);
  EXPECT_GT(std::abs(a.a - b.a), 1e-9);
  EXPECT_GT(std::abs(a.pi - b.pi), 1e-9);
}

TEST(U0, VanishingCases) {
  MarketParams m;
  const auto z = sec5_claims();
  auto p = with_kernel(KernelSpec::fractional(1.0, 1.33));
  p.sigma = 0.0;
  const MortalityModel quiet(p, DiscreteGrid(0.0, 3.0, 300));
  EXPECT_EQ(u0_diagnostic(m, z, quiet, quiet.simulate(1), 0.0), 0.0);
  m.eta = m.theta = 0.0;
  const MortalityModel model(with_kernel(KernelSpec::fractional(1.0, 1.33)), DiscreteGrid(0.0, 3.0, 300));
  EXPECT_EQ(u0_diagnostic(m, z, model, model.simulate(1), 0.0), 0.0);
}

TEST(U0, StableUnderRefinement) {
  MarketParams m;
  const auto z = sec5_claims();
  const auto p = with_kernel(KernelSpec::fractional(1.0, 1.33));
  const MortalityModel coarse(p, DiscreteGrid(0.0, 3.0, 300));
  const MortalityModel fine(p, DiscreteGrid(0.0, 3.0, 1200));
  // λ_0 is deterministic, so both paths share the t = 0 state.
  const double u1 = u0_diagnostic(m, z, coarse, coarse.simulate(1), 0.0);
  const double u2 = u0_diagnostic(m, z, fine, fine.simulate(1), 0.0);
  EXPECT_GT(u1, 0.0);
  EXPECT_NEAR(u1, u2, 1e-6);
}

TEST(Assumptions, Section5Fails) {
  MarketParams m;
  const auto rep = check_assumptions(m, sec5_claims(), MortalityParams{}, {1.0, 0.0}, DiscreteGrid(0.0, 3.0, 300));
  EXPECT_NEAR(rep.bound_uniqueness, 4.4, 1e-12);
  EXPECT_NEAR(rep.bound_admissibility, 36.0, 1e-12);
  EXPECT_GT(rep.sup_integral, 0.0);
  EXPECT_NEAR(rep.c2_limit, 12.5, 1e-12);
  EXPECT_GE(rep.required_c2, 36.0);
  EXPECT_EQ(rep.largeenough, Verdict::Fail);
  EXPECT_EQ(rep.assumption4, Verdict::NotVerifiable);
  EXPECT_NE(rep.text().find("FAIL"), std::string::npos);
}

TEST(Assumptions, ZeroLoadingPasses) {
  MarketParams m;
  m.eta = m.theta = 0.0;
  const auto rep = check_assumptions(m, sec5_claims(), MortalityParams{}, {1.0, 0.0}, DiscreteGrid(0.0, 3.0, 300));
  EXPECT_EQ(rep.required_c2, 0.0);
  EXPECT_EQ(rep.largeenough, Verdict::Pass);
  EXPECT_EQ(rep.assumption4, Verdict::Pass);
}

TEST(Assumptions, BoundedClaimsAtBoundary) {
  MarketParams m;
  const DiscreteGrid g(0.0, 3.0, 60);
  const auto at = check_assumptions(m, moment_fit(ClaimFamily::BoundedUniform, 1.0, 1.2, 6.0), MortalityParams{},
                                    {1.0, 0.0}, g);
  EXPECT_EQ(at.assumption4, Verdict::Pass);
  const auto over = check_assumptions(m, moment_fit(ClaimFamily::BoundedUniform, 1.0, 1.2, 6.5), MortalityParams{},
                                      {1.0, 0.0}, g);
  EXPECT_EQ(over.assumption4, Verdict::Fail);
}

TEST(Assumptions, ConstantRegimeUsesFirstBound) {
  MarketParams m;
  const auto rep = check_assumptions(m, sec5_claims(), MortalityParams{}, {0.0, 1.0}, DiscreteGrid(0.0, 3.0, 60));
  EXPECT_NEAR(rep.required_c2, 4.4, 1e-12);
  EXPECT_EQ(rep.largeenough, Verdict::Pass);
  EXPECT_EQ(rep.assumption4, Verdict::NotApplicable);
}
