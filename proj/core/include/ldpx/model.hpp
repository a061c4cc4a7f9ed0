#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ldpx/grid.hpp"
#include "ldpx/periodic_function.hpp"

namespace ldpx {

/// Vector field on the torus; the second component is unused when dim == 1.
using VectorField = std::array<PeriodicFunction, 2>;

/// Coupled diffusion on the unit torus and its additive observable:
///
///   dX = sum_i V_i(X) o dW^i + V_0(X) dt      (Stratonovich)
///   dY = sigma(X) dW~ + b(X) dt               (W~ independent of W)
struct TorusDiffusionSpec {
  int dim = 1;
  std::vector<VectorField> diffusion;
  VectorField drift;
  PeriodicFunction obs_drift;
  PeriodicFunction obs_noise;

  /// D(x) = sum_i V_i V_i^T at a point, row-major 2x2.
  std::array<double, 4> diffusion_matrix(const Point& x) const;
  /// Drift of the divergence-form generator: V_0 - 1/2 sum_i (div V_i) V_i.
  std::array<double, 2> divergence_form_drift(const Point& x) const;
  /// Ito drift of the Stratonovich SDE: V_0 + 1/2 sum_i (V_i . grad) V_i.
  std::array<double, 2> ito_drift(const Point& x) const;
  /// True when every V_i is constant, so Ito and Stratonovich readings coincide.
  bool constant_diffusion() const;
  int max_harmonic() const;
};

/// Finite-state chain with additive increments. A step i -> j happens with
/// probability P_ij and adds `h_ij + m_i + sqrt(v_i) Z` to the observable.
struct DiscreteChainSpec {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd transition_increment;
  Eigen::VectorXd increment_mean;
  Eigen::VectorXd increment_var;

  std::size_t n_states() const { return static_cast<std::size_t>(transition.rows()); }
  /// All variances zero and all increments integer: S_n lives on the integer lattice.
  bool lattice() const;
  bool gaussian() const;
};

using ModelSpec = std::variant<TorusDiffusionSpec, DiscreteChainSpec>;

/// Test vector v in l(L(z,t) v): all ones, explicit node values, or a torus function.
struct TestVector {
  std::variant<std::monostate, std::vector<double>, PeriodicFunction> source;

  bool is_ones() const { return std::holds_alternative<std::monostate>(source); }
};

/// Dirac start functional l = delta_{x0} and test vector v.
struct EvaluationFrame {
  std::size_t start_index = 0;
  /// When set, overrides start_index with the grid node nearest to this point.
  std::optional<Point> start_point;
  TestVector test_vector;

  std::size_t resolve_start(const PeriodicGrid& grid) const;
  Eigen::VectorXd resolve_test_vector(const PeriodicGrid& grid) const;
  Eigen::VectorXd resolve_test_vector(std::size_t n_states) const;
};

struct ValidationReport {
  std::vector<std::string> issues;
  std::vector<std::string> warnings;

  bool ok() const { return issues.empty(); }
};

/// Lists every violated invariant; an empty issue list means the model is usable.
ValidationReport validate_spec(const TorusDiffusionSpec& spec, std::size_t grid_n = 256);
ValidationReport validate_spec(const DiscreteChainSpec& spec);
ValidationReport validate_spec(const ModelSpec& spec, std::size_t grid_n = 256);
/// Adds frame checks (start in range, v finite and nonzero) to the model checks.
ValidationReport validate_frame(const EvaluationFrame& frame, const ModelSpec& spec,
                                std::size_t grid_n = 256);

/// Returns the model with b replaced by b - int b d(rho). Throws PreconditionError
/// if the density is negative or not normalized.
TorusDiffusionSpec center_observable(const TorusDiffusionSpec& spec, const InvariantDensity& density,
                                     const PeriodicGrid& grid);
/// Chain analogue: shifts the per-state means so the stationary mean increment is zero.
DiscreteChainSpec center_observable(const DiscreteChainSpec& spec, const InvariantDensity& density);

}  // namespace ldpx
