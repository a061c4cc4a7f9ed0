#include <gtest/gtest.h>

#include <cmath>

#include "golden.hpp"
#include "ldpx/errors.hpp"
#include "ldpx/presets.hpp"
#include "ldpx/rate.hpp"

using namespace ldpx;

TEST(Rate, GaussianClosedForm) {
  const auto f = TiltedFamily::from_model(presets::gaussian_baseline(32).spec, 32);
  for (double a : {0.5, 1.0, 2.0}) {
    const auto p = rate_point(f, a);
    EXPECT_NEAR(p.theta_a, a, 1e-8);
    EXPECT_NEAR(p.I, 0.5 * a * a, 1e-8);
    EXPECT_NEAR(p.Isecond, 1.0, 1e-8);
    EXPECT_LT(std::abs(p.duality_residual), 1e-10);
  }
}

TEST(Rate, OutsideWindowIsRangeError) {
  const auto f = TiltedFamily::from_model(presets::gaussian_baseline(32).spec, 32);
  EXPECT_THROW(solve_theta(f, -0.5), RangeError);
  EXPECT_THROW(solve_theta(f, 0.0), RangeError);
  EXPECT_THROW(solve_theta(f, std::nan("")), PreconditionError);
  // The bracket doubles past theta_max up to theta_cap.
  RateOptions o;
  o.theta_max = 2.0;
  o.theta_cap = 4.0;
  EXPECT_NEAR(solve_theta(f, 3.0, o), 3.0, 1e-8);
  EXPECT_THROW(solve_theta(f, 5.0, o), RangeError);
}

TEST(Rate, ChainClosedForm) {
  // +-1 fair walk: theta_a = atanh a, I = a atanh a - log cosh atanh a.
  const auto f = TiltedFamily::from_model(presets::two_state_pm1().spec, 0);
  for (double a : {0.2, 0.6, 0.9}) {
    const auto p = rate_point(f, a);
    const double th = std::atanh(a);
    EXPECT_NEAR(p.theta_a, th, 1e-9);
    EXPECT_NEAR(p.I, a * th - std::log(std::cosh(th)), 1e-10);
    EXPECT_NEAR(p.Isecond, 1.0 / (1.0 - a * a), 1e-7);
  }
  // The walk can never exceed slope 1.
  EXPECT_THROW(solve_theta(f, 1.5), RangeError);
}

TEST(Rate, MathieuMatchesOracle) {
  const auto f = TiltedFamily::from_model(presets::mathieu().spec, 256);
  const auto p = rate_point(f, golden::mathieu_a);
  EXPECT_NEAR(p.theta_a, golden::mathieu_theta_a, 1e-9);
  EXPECT_NEAR(p.I, golden::mathieu_I, 2e-11);  // the oracle eigenvalues carry ~eps / h^2 round-off
  EXPECT_NEAR(p.Isecond, golden::mathieu_Isecond, 1e-8);
}

TEST(Rate, TableKeepsGoingPastBadRows) {
  const auto f = TiltedFamily::from_model(presets::gaussian_baseline(32).spec, 32);
  const auto rows = rate_table(f, {-1.0, 1.0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_FALSE(rows[0].point.has_value());
  EXPECT_FALSE(rows[0].error.empty());
  ASSERT_TRUE(rows[1].point.has_value());
  EXPECT_NEAR(rows[1].point->I, 0.5, 1e-8);
}

TEST(Rate, AdmissibleRange) {
  const auto f = TiltedFamily::from_model(presets::gaussian_baseline(32).spec, 32);
  const auto r = admissible_range(f);
  EXPECT_NEAR(r.lo, 0.0, 1e-8);
  EXPECT_NEAR(r.hi, 8.0, 1e-6);
}
