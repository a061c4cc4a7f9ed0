#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "golden.hpp"
#include "ldpx/errors.hpp"
#include "ldpx/parallel.hpp"
#include "ldpx/presets.hpp"
#include "ldpx/simulate.hpp"

using namespace ldpx;

namespace {

const TorusDiffusionSpec& torus(const ModelConfig& m) { return std::get<TorusDiffusionSpec>(m.spec); }

double sample_var(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / (v.size() - 1);
}

}  // namespace

TEST(PathRng, ReproducibleAndIndependentStreams) {
  PathRng a(7, 3, PathRng::state_noise), b(7, 3, PathRng::state_noise), c(7, 3, PathRng::observable_noise),
      d(7, 4, PathRng::state_noise);
  for (int i = 0; i < 10; ++i) {
    const double x = a.normal();
    EXPECT_EQ(x, b.normal());
    EXPECT_NE(x, c.normal());
    EXPECT_NE(x, d.normal());
  }
  const double u = a.uniform();
  EXPECT_GE(u, 0.0);
  EXPECT_LT(u, 1.0);
}

TEST(PairwiseSum, ExactOnRepresentableData) {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(pairwise_sum(v.data(), v.size()), 500500.0);
  EXPECT_EQ(pairwise_sum(v.data(), 0), 0.0);
}

TEST(EulerMaruyama, GaussianMoments) {
  SimulationOptions o;
  o.dt = 1e-2;
  o.n_paths = 4000;
  const auto batch = euler_maruyama(torus(presets::gaussian_baseline(32)), {0.0, 0.0}, 2.0, o);
  ASSERT_EQ(batch.y.size(), 4000u);
  const double mean = std::accumulate(batch.y.begin(), batch.y.end(), 0.0) / 4000.0;
  EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(2.0 / 4000.0));
  // Var(Y_2) = 2, sampling sd of the variance ~ 2 sqrt(2 / n).
  EXPECT_NEAR(sample_var(batch.y), 2.0, 5.0 * 2.0 * std::sqrt(2.0 / 4000.0));
  for (double x : batch.x) {
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(EulerMaruyama, MathieuMeanDrift) {
  // Started from the uniform law the observable drift averages to zero; from x0 = 0 the
  // mean of Y_t is int_0^t e^{-2 pi^2 s} ds = (1 - e^{-2 pi^2 t}) / (2 pi^2).
  SimulationOptions o;
  o.dt = 1e-3;
  o.n_paths = 4000;
  const auto batch = euler_maruyama(torus(presets::mathieu(64)), {0.0, 0.0}, 1.0, o);
  const double mean = std::accumulate(batch.y.begin(), batch.y.end(), 0.0) / 4000.0;
  const double ref = (1.0 - std::exp(-2 * M_PI * M_PI)) / (2 * M_PI * M_PI);
  EXPECT_NEAR(mean, ref, 5.0 * std::sqrt(sample_var(batch.y) / 4000.0));
}

TEST(EulerMaruyama, ThreadCountDoesNotChangePaths) {
  SimulationOptions o;
  o.dt = 1e-2;
  o.n_paths = 257;
  o.seed = 99;
  const auto spec = torus(presets::gradient_drift(64));
  set_thread_count(1);
  const auto serial = euler_maruyama(spec, {0.3, 0.0}, 1.0, o);
  set_thread_count(4);
  const auto parallel = euler_maruyama(spec, {0.3, 0.0}, 1.0, o);
  set_thread_count(0);
  EXPECT_EQ(serial.x, parallel.x);
  EXPECT_EQ(serial.y, parallel.y);
}

TEST(EulerMaruyama, StepPreconditions) {
  SimulationOptions o;
  o.n_paths = 4;
  const auto spec = torus(presets::gaussian_baseline(32));
  o.dt = 0.05;
  EXPECT_THROW(euler_maruyama(spec, {0.0, 0.0}, 1.0, o), PreconditionError);
  o.dt = 3e-3;
  EXPECT_THROW(euler_maruyama(spec, {0.0, 0.0}, 1.0, o), PreconditionError);
}

TEST(TiltedDynamics, GaussianShiftsTheObservableDrift) {
  const auto td = tilted_dynamics(torus(presets::gaussian_baseline(32)), 1.5, 32);
  EXPECT_NEAR(td.mu, 1.125, 1e-10);
  EXPECT_NEAR(td.spec.obs_drift(0.37), 1.5, 1e-12);
}

TEST(ImportanceSampling, GaussianSmallTail) {
  SimulationOptions o;
  o.dt = 1e-2;
  o.n_paths = 2000;
  const auto m = presets::gaussian_baseline(32);
  const auto est = estimate_tail_is(torus(m), m.frame, 1.0, 4.0, o, 32);
  const double ref = 0.5 * std::erfc(2.0 / std::sqrt(2.0));  // P(N(0,4) >= 4)
  EXPECT_NEAR(est.p_hat, ref, 4.0 * est.stderr_);
  EXPECT_GT(est.ess, 100.0);
  EXPECT_NEAR(est.theta, 1.0, 1e-8);
}

TEST(ImportanceSampling, MathieuAgreesWithNaive) {
  // Moderate level so that plain Monte Carlo also resolves it.
  SimulationOptions o;
  o.dt = 1e-2;
  o.n_paths = 4000;
  const auto m = presets::mathieu(64);
  const auto is = estimate_tail_is(torus(m), m.frame, 0.3, 4.0, o, 64);
  const auto mc = estimate_tail_mc(torus(m), m.frame, 0.3, 4.0, o, 64);
  EXPECT_NEAR(is.p_hat, mc.p_hat, 4.0 * std::hypot(is.stderr_, mc.stderr_));
  EXPECT_LT(is.stderr_, mc.stderr_);
}

TEST(EffectiveDiffusivity, MathieuAtZero) {
  const auto c = effective_diffusivity(torus(presets::mathieu()), 0.0, 256);
  EXPECT_NEAR(c.xi, golden::mathieu_d2_n256[0], 1e-9);
}

TEST(Decorrelation, StatisticShrinks) {
  SimulationOptions o;
  o.dt = 1e-2;
  o.n_paths = 2000;
  const auto r = decorrelation_check(torus(presets::mathieu(64)), 0.5, {1.0, 4.0}, o, 64, 50);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.envelope));
  for (const auto& row : r.rows) {
    EXPECT_GT(row.stderr_, 0.0);
    EXPECT_GT(row.bootstrap_stderr, 0.0);
  }
}
