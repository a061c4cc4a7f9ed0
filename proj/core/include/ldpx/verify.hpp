#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ldpx/expansion.hpp"

namespace ldpx {

/// One checked condition at one tilt. The verdict is recomputed from `value` and
/// `threshold` every time, so a report can never disagree with its own numbers.
struct Verdict {
  enum class Compare { above, below };

  std::string condition;  // "B1", "B2", "B3", "D1-2", "D2", "D3-convexity", "D3-positivity"
  double theta = 0.0;
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  Compare compare = Compare::above;
  std::string note;

  bool pass() const;
};

struct ConditionReport {
  std::vector<Verdict> verdicts;

  bool empty() const { return verdicts.empty(); }
  bool all_pass() const;
  /// True when every verdict for `condition` passes (and there is at least one).
  bool passed(const std::string& condition) const;
  std::vector<Verdict> failures() const;
};

struct SuiteOptions {
  /// B1 surrogate: mu(z) on a circle of this radius around each theta, fitted by a polynomial.
  double disc_radius = 0.2;
  int disc_points = 12;
  int poly_degree = 8;
  double b1_tol = 1e-8;
  /// Gap thresholds, relative to max(1, |mu|).
  double gap_tol = 1e-9;
  double projector_tol = 1e-8;
  SpectralOptions spectral;
};

struct B1Surrogate {
  double residual = 0.0;
  int degree = 0;
  std::vector<double> coefficients_abs;
};

/// Fits mu(z) on a disc around theta and measures the fit at off-grid points inside it.
/// A small residual is evidence of analyticity, not a proof.
B1Surrogate b1_surrogate(const TiltedFamily& family, double theta, const SuiteOptions& opts = {});

struct ProjectorCheck {
  /// max over t of || Pi(t) - Pi(1) ||_inf, Pi(t) recomputed from the semigroup matrix.
  double residual = 0.0;
  /// max over t of || Pi(t) - g psi^T ||_inf against the generator eigenpair.
  double eigenpair_distance = 0.0;
  std::vector<double> per_t;
};

/// Pi(t) comes from power iteration on exp(t G(theta)) (or M^t), independently of top_eigen.
ProjectorCheck projector_time_independence(const TiltedFamily& family, double theta,
                                           const std::vector<double>& t_list);

/// Every check over every theta; failures (including thrown errors) become failed verdicts.
ConditionReport run_condition_suite(const TiltedFamily& family, const Observation& obs,
                                    const std::vector<double>& theta_grid, const std::vector<double>& s_grid,
                                    const std::vector<double>& t_grid, const SuiteOptions& opts = {});

/// Exact law of S_n for a finite chain, on a value lattice of step `delta`.
struct ChainTailOracle {
  std::size_t n_steps = 0;
  double delta = 1.0;
  /// Value of lattice index 0.
  double offset = 0.0;
  /// E[1{S_n^lattice = offset + k delta} v(X_n)].
  std::vector<double> mass;
  /// Variance of the Gaussian part (equal per state, so it adds n v at the end).
  double gaussian_var = 0.0;

  double total() const;
  /// E[1{S_n >= level} v(X_n)].
  double tail_at(double level) const;
  double tail(double a) const { return tail_at(a * static_cast<double>(n_steps)); }
};

/// Dynamic programming over (state, accumulated value). Needs n <= 60, increments
/// on a common lattice (resolution 1e-8), equal Gaussian variances, and at most 1e6 cells.
ChainTailOracle chain_tail_oracle(const DiscreteChainSpec& chain, const Observation& obs, std::size_t n_steps);
double brute_force_chain_tail(const DiscreteChainSpec& chain, const Observation& obs, std::size_t n_steps,
                              double a);

}  // namespace ldpx
