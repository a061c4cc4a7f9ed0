#include "ldpx/rate.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "ldpx/errors.hpp"
#include "ldpx/parallel.hpp"

namespace ldpx {
namespace {

struct SlopeEval {
  double d1 = 0.0;
  SpectralTriple triple;
};

SlopeEval slope(const TiltedFamily& family, double theta, const RateOptions& opts) {
  SlopeEval e;
  e.triple = top_eigen(family, theta, opts.spectral);
  e.d1 = cgf_d1_spectral(family, e.triple);
  return e;
}

}  // namespace

SlopeRange admissible_range(const TiltedFamily& family, const RateOptions& opts) {
  if (!(opts.theta_max > 0.0)) throw PreconditionError("theta_max must be positive");
  SlopeRange r;
  r.lo = slope(family, 0.0, opts).d1;
  r.theta_hi = opts.theta_max;
  r.hi = slope(family, r.theta_hi, opts).d1;
  return r;
}

double solve_theta(const TiltedFamily& family, double a, const RateOptions& opts) {
  if (!std::isfinite(a)) throw PreconditionError("a must be finite");
  SlopeEval lo_eval = slope(family, 0.0, opts);
  const double mean = lo_eval.d1;
  double lo = 0.0;
  double hi = opts.theta_max;
  SlopeEval hi_eval = slope(family, hi, opts);
  while (hi_eval.d1 <= a && 2.0 * hi <= opts.theta_cap) {
    lo = hi;
    lo_eval = std::move(hi_eval);
    hi *= 2.0;
    hi_eval = slope(family, hi, opts);
  }
  if (!(a > mean) || !(a < hi_eval.d1)) {
    std::ostringstream os;
    os.precision(12);
    os << "a = " << a << " outside the admissible open range (" << mean << ", " << hi_eval.d1
       << ") explored for theta in [0, " << hi << "]";
    throw RangeError(os.str());
  }
  if (!(hi_eval.d1 > lo_eval.d1)) throw ConditionError("mu' is not increasing: mu'' <= 0 detected");

  // Safeguarded Newton: bisect whenever the Newton step leaves the bracket.
  double theta = lo + (a - lo_eval.d1) * (hi - lo) / (hi_eval.d1 - lo_eval.d1);
  for (int it = 0; it < 200; ++it) {
    const SlopeEval e = slope(family, theta, opts);
    const double f = e.d1 - a;
    if (std::abs(f) <= opts.tol) return theta;
    if (f > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    const double curvature = solve_corrector(family, e.triple).xi;
    if (!(curvature > 0.0)) {
      throw ConditionError("mu''(" + std::to_string(theta) + ") <= 0: convexity violated");
    }
    double next = theta - f / curvature;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-15 * std::max(1.0, hi)) return next;
    theta = next;
  }
  throw NumericalError("theta solve did not converge");
}

RatePoint rate_point(const TiltedFamily& family, double a, const RateOptions& opts) {
  RatePoint p;
  p.a = a;
  p.theta_a = solve_theta(family, a, opts);
  p.mu = cgf(family, p.theta_a);
  p.I = a * p.theta_a - p.mu;
  // The corrector route is exact up to discretization; second differences lose ~1e-6 to round-off.
  const double d2 = solve_corrector(family, top_eigen(family, p.theta_a, opts.spectral)).xi;
  if (!(d2 > 0.0)) throw ConditionError("mu''(theta_a) <= 0: convexity violated");
  p.Isecond = 1.0 / d2;
  // Independent check of the Legendre transform: maximize a theta - mu(theta) directly
  // (Brent, no derivatives) around theta_a and compare the supremum with I.
  const double w = std::max(0.05, 0.1 * std::abs(p.theta_a));
  const auto best = boost::math::tools::brent_find_minima(
      [&](double th) { return cgf(family, th) - a * th; }, p.theta_a - w, p.theta_a + w, 26);
  p.duality_residual = p.I + best.second;
  return p;
}

std::vector<RateRow> rate_table(const TiltedFamily& family, const std::vector<double>& a_list,
                                const RateOptions& opts) {
  std::vector<RateRow> rows(a_list.size());
  parallel_for(a_list.size(), [&](std::size_t k) {
    rows[k].a = a_list[k];
    try {
      rows[k].point = rate_point(family, a_list[k], opts);
    } catch (const Error& e) {
      rows[k].error = e.what();
    }
  });
  return rows;
}

}  // namespace ldpx
