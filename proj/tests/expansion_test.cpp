#include <gtest/gtest.h>

#include <cmath>

#include "golden.hpp"
#include "ldpx/errors.hpp"
#include "ldpx/expansion.hpp"
#include "ldpx/presets.hpp"
#include "ldpx/verify.hpp"

using namespace ldpx;

namespace {

struct Fixture {
  TiltedFamily family;
  Observation obs;
};

Fixture make(const ModelConfig& m, std::size_t n) {
  auto f = TiltedFamily::from_model(m.spec, n);
  auto obs = resolve_observation(m.frame, f);
  return {std::move(f), std::move(obs)};
}

}  // namespace

TEST(Expansion, GaussianMgf) {
  auto [f, obs] = make(presets::gaussian_baseline(32), 32);
  const cplx z(0.5, 0.8);
  const cplx m = mgf(f, obs, z, 3.0);
  const cplx ref = std::exp(0.5 * z * z * 3.0);
  EXPECT_LT(std::abs(m - ref) / std::abs(ref), 1e-10);
  EXPECT_THROW(mgf(f, obs, 40.0, 1.0), RangeError);
  EXPECT_NEAR(log_mgf(f, obs, 40.0, 1.0).real(), 800.0, 1e-6);
}

TEST(Expansion, ChainTailMatchesBinomial) {
  auto [f, obs] = make(presets::two_state_pm1(), 0);
  for (const auto& c : golden::two_state) {
    const double p = exact_tail(f, obs, c.a, c.n);
    EXPECT_NEAR(p / c.p, 1.0, 1e-6) << "n=" << c.n << " a=" << c.a;
  }
}

TEST(Expansion, ChainOracleAgreesWithBruteForce) {
  const auto m = presets::two_state_pm1();
  auto [f, obs] = make(m, 0);
  const auto& chain = std::get<DiscreteChainSpec>(m.spec);
  const auto oracle = chain_tail_oracle(chain, obs, 10);
  EXPECT_NEAR(oracle.total(), 1.0, 1e-14);
  EXPECT_NEAR(oracle.tail(0.6), 0.0546875, 1e-15);
  EXPECT_NEAR(brute_force_chain_tail(chain, obs, 10, 0.6), 0.0546875, 1e-15);
}

TEST(Expansion, GaussianTail) {
  auto [f, obs] = make(presets::gaussian_baseline(32), 32);
  EXPECT_NEAR(exact_tail(f, obs, 1.0, 16.0) / golden::gaussian_tail_a1_t16, 1.0, 1e-6);
  EXPECT_THROW(exact_tail(f, obs, 1.0, 0.0), PreconditionError);
}

TEST(Expansion, GaussianLeadingCoefficient) {
  auto [f, obs] = make(presets::gaussian_baseline(64), 64);
  const auto lc = leading_coefficient(f, obs, 1.0);
  EXPECT_NEAR(lc.d0, golden::gaussian_D[0], 1e-6);
  EXPECT_NEAR(lc.g_start, 1.0, 1e-12);
}

TEST(Expansion, MathieuLeadingCoefficient) {
  auto [f, obs] = make(presets::mathieu(), 256);
  const auto lc = leading_coefficient(f, obs, golden::mathieu_a);
  EXPECT_NEAR(lc.d0 / golden::mathieu_D0, 1.0, 1e-8);
}

TEST(Expansion, LatticeChainHasNoDensityPrefactor) {
  auto [f, obs] = make(presets::two_state_pm1(), 0);
  EXPECT_THROW(leading_coefficient(f, obs, 0.5), PreconditionError);
}

TEST(Expansion, TestFunctionTransforms) {
  const auto g = TestFunction::gaussian_window(2.0, 0.5);
  const cplx z(0.3, 0.7);
  const cplx ref = 2.0 * 0.5 * std::sqrt(2 * M_PI) * std::exp(z * z * 0.125);
  EXPECT_LT(std::abs(g.laplace(z) - ref), 1e-12);
  const auto e = TestFunction::one_sided_exponential(1.0, 2.0);
  EXPECT_LT(std::abs(e.laplace(z) - 1.0 / (2.0 + z)), 1e-12);
  EXPECT_NEAR(e.pole_distance(0.5), 2.5, 1e-15);
  EXPECT_EQ(e(-1.0), 0.0);
  // Bump: compare the transform at a real point with a midpoint sum.
  const auto b = TestFunction::compact_bump(1.0, 1.0);
  double sum = 0.0;
  const int m = 20000;
  for (int i = 0; i < m; ++i) {
    const double x = -1.0 + (i + 0.5) * 2.0 / m;
    sum += b(x) * std::exp(-0.4 * x) * 2.0 / m;
  }
  EXPECT_NEAR(b.laplace(0.4).real(), sum, 1e-8);
}

TEST(Expansion, GaussianWeakExpectation) {
  auto [f, obs] = make(presets::gaussian_baseline(32), 32);
  const auto w = TestFunction::gaussian_window(1.0, 0.7);
  const double t = 9.0, a = 1.0;
  // S_t - a t ~ N(-a t, t) convolved with the window.
  const double var = t + 0.49;
  const double ref = std::exp(0.5 * a * a * t) * 0.7 / std::sqrt(var) * std::exp(-(a * t) * (a * t) / (2 * var));
  EXPECT_NEAR(weak_expectation(f, obs, w, a, t) / ref, 1.0, 1e-6);
  // Windows slower than e^{-theta_a x} are refused.
  EXPECT_THROW(weak_expectation(f, obs, TestFunction::one_sided_exponential(1.0, 0.5), a, t), ConditionError);
}

TEST(Expansion, GaussianCoefficientFit) {
  auto [f, obs] = make(presets::gaussian_baseline(64), 64);
  std::vector<double> ts;
  for (int k = 0; k <= 8; ++k) ts.push_back(16.0 * std::pow(2.0, k / 2.0));
  const auto fit = extract_coefficients(f, obs, 1.0, ts, 6);
  ASSERT_GE(fit.coefficients.size(), 3u);
  EXPECT_NEAR(fit.coefficients[0] / golden::gaussian_D[0], 1.0, 0.01);
  EXPECT_NEAR(fit.coefficients[1] / golden::gaussian_D[1], 1.0, 0.02);
  EXPECT_NEAR(fit.coefficients[2] / golden::gaussian_D[2], 1.0, 0.10);
  EXPECT_TRUE(fit.prefactor_agrees);
}
