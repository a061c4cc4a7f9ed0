#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ldpx/spectral.hpp"

namespace ldpx {

struct RateOptions {
  double theta_max = 8.0;
  /// Doubling limit for the bracket when mu'(theta_max) < a.
  double theta_cap = 64.0;
  double tol = 1e-10;
  SpectralOptions spectral;
};

struct RatePoint {
  double a = 0.0;
  double theta_a = 0.0;
  double I = 0.0;
  double Isecond = 0.0;
  double mu = 0.0;
  /// I - sup_theta (a theta - mu(theta)), the supremum taken by a derivative-free search.
  double duality_residual = 0.0;
};

/// Admissible slope window (mu'(0), mu'(theta_hi)) for the explored bracket.
struct SlopeRange {
  double lo = 0.0;
  double hi = 0.0;
  double theta_hi = 0.0;
};

SlopeRange admissible_range(const TiltedFamily& family, const RateOptions& opts = {});

/// Root of mu'(theta) = a. Throws RangeError outside the open window and
/// ConditionError when mu'' <= 0 is detected.
double solve_theta(const TiltedFamily& family, double a, const RateOptions& opts = {});
RatePoint rate_point(const TiltedFamily& family, double a, const RateOptions& opts = {});

struct RateRow {
  double a = 0.0;
  std::optional<RatePoint> point;
  std::string error;
};

/// Elementwise rate_point; per-row failures are recorded, not thrown.
std::vector<RateRow> rate_table(const TiltedFamily& family, const std::vector<double>& a_list,
                                const RateOptions& opts = {});

}  // namespace ldpx
