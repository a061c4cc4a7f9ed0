#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ldpx/errors.hpp"
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

TEST(Verdict, RecomputedFromNumbers) {
  Verdict v{"B2", 0.5, "gap", 1.0, 0.5, Verdict::Compare::above, ""};
  EXPECT_TRUE(v.pass());
  v.value = std::nan("");
  EXPECT_FALSE(v.pass());
  v.value = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(v.pass());
  v.compare = Verdict::Compare::below;
  EXPECT_FALSE(v.pass());
}

TEST(ConditionSuite, GaussianPassesEverything) {
  auto [f, obs] = make(presets::gaussian_baseline(32), 32);
  const auto r = run_condition_suite(f, obs, {0.5, 1.0}, {0.1, 1.0, 10.0, 50.0}, {1.0, 1.5, 2.0});
  EXPECT_TRUE(r.all_pass());
  for (const char* c : {"B1", "B2", "B3", "D1-2", "D2", "D3-convexity", "D3-positivity"}) EXPECT_TRUE(r.passed(c)) << c;
}

TEST(ConditionSuite, PeriodicChainFailsB3) {
  auto [f, obs] = make(presets::checkerboard_chain(), 0);
  const auto r = run_condition_suite(f, obs, {0.5}, {0.1, 0.5, 1.0, 2.0, 4.0}, {1.0, 2.0});
  EXPECT_FALSE(r.passed("B3"));
  EXPECT_FALSE(r.all_pass());
  EXPECT_FALSE(r.failures().empty());
}

TEST(ConditionSuite, NoVerdictsMeansNotPassed) {
  ConditionReport r;
  EXPECT_FALSE(r.passed("B1"));
}

TEST(Projector, TimeIndependentForMathieu) {
  auto [f, obs] = make(presets::mathieu(64), 64);
  const auto p = projector_time_independence(f, 0.5, {1.0, 1.25, 1.5, 2.0});
  EXPECT_LT(p.residual, 1e-8);
  EXPECT_LT(p.eigenpair_distance, 1e-8);
  EXPECT_EQ(p.per_t.size(), 4u);
}

TEST(B1, SurrogateFitsAnalyticCgf) {
  auto [f, obs] = make(presets::mathieu(64), 64);
  EXPECT_LT(b1_surrogate(f, 0.5).residual, 1e-8);
}

TEST(ChainOracle, Preconditions) {
  const auto m = presets::two_state_pm1();
  auto [f, obs] = make(m, 0);
  const auto& chain = std::get<DiscreteChainSpec>(m.spec);
  EXPECT_THROW(chain_tail_oracle(chain, obs, 61), PreconditionError);
  DiscreteChainSpec irr = chain;
  irr.transition_increment(0, 0) = std::sqrt(2.0);
  EXPECT_THROW(chain_tail_oracle(irr, obs, 10), PreconditionError);
}

TEST(ChainOracle, GaussianPartIsConvolvedIn) {
  // Adding N(0, 1) per step to the +-1 walk: the oracle's Gaussian variance is n.
  auto m = presets::two_state_pm1();
  auto& chain = std::get<DiscreteChainSpec>(m.spec);
  chain.increment_var.setOnes();
  auto [f, obs] = make(m, 0);
  const auto oracle = chain_tail_oracle(chain, obs, 12);
  EXPECT_DOUBLE_EQ(oracle.gaussian_var, 12.0);
  EXPECT_NEAR(oracle.tail(0.5) / exact_tail(f, obs, 0.5, 12.0), 1.0, 1e-6);
}
