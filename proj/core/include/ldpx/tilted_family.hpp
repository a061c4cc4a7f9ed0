#pragma once

#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "ldpx/discretize.hpp"
#include "ldpx/model.hpp"

namespace ldpx {

enum class TimeKind { continuous, discrete };

/// One-parameter family of tilted evolution operators, the common input of the
/// spectral, rate and expansion modules.
///
/// Continuous time: the tilted generator G(z), with mu(z) its rightmost eigenvalue.
/// Discrete time: the tilted transfer matrix M(z)_ij = P_ij exp(z (h_ij + m_i) + z^2 v_i / 2),
/// with mu(z) the logarithm of its Perron root. In both cases E[e^{z S_t}] = l(U(z, t) v).
class TiltedFamily {
 public:
  static TiltedFamily diffusion(const TorusDiffusionSpec& spec, const PeriodicGrid& grid);
  static TiltedFamily diffusion(GeneratorMatrix base, PeriodicGrid grid);
  static TiltedFamily chain(const DiscreteChainSpec& spec);
  /// Dispatches on the model kind; grid_n is ignored for chains.
  static TiltedFamily from_model(const ModelSpec& spec, std::size_t grid_n);

  TimeKind time() const { return time_; }
  bool discrete() const { return time_ == TimeKind::discrete; }
  Eigen::Index size() const;
  /// True for chains whose increments are integers with no Gaussian part.
  bool lattice() const { return lattice_; }
  /// True when the real-tilt operator is symmetric (reversible, e.g. V_0 = 0 in one dimension).
  bool symmetric() const { return symmetric_; }

  Eigen::MatrixXcd matrix(cplx z) const;
  Eigen::MatrixXd real_matrix(double theta) const;
  /// d/dtheta of the real operator.
  Eigen::MatrixXd real_derivative(double theta) const;

  /// U(z, t) / e^{t shift}: exp(t (G - shift)) or (M e^{-shift})^t. Chains need integer t.
  Eigen::MatrixXcd propagator(cplx z, double t, cplx shift = 0.0) const;
  Eigen::MatrixXd real_propagator(double theta, double t, double shift = 0.0) const;

  /// e^{t (omega - mu)} for a generator eigenvalue omega, or (lambda / e^{mu})^t for a chain eigenvalue.
  cplx normalized_power(cplx eigenvalue, double mu, double t) const;
  /// Spectral exponent of an eigenvalue: itself for generators, its log for chains.
  cplx exponent(cplx eigenvalue) const;

  /// Grid behind a diffusion family; empty for chains.
  const std::optional<PeriodicGrid>& grid() const { return grid_; }
  const GeneratorMatrix* generator() const { return generator_ ? &*generator_ : nullptr; }
  const DiscreteChainSpec* chain_spec() const { return chain_ ? &*chain_ : nullptr; }
  /// sigma^2 per node (diffusions) or v_i per state (chains).
  const Eigen::VectorXd& noise_var() const;

  void check_time(double t) const;

 private:
  TimeKind time_ = TimeKind::continuous;
  bool lattice_ = false;
  bool symmetric_ = false;
  std::optional<PeriodicGrid> grid_;
  std::optional<GeneratorMatrix> generator_;
  std::optional<DiscreteChainSpec> chain_;
  Eigen::MatrixXd chain_shift_;  // h_ij + m_i
};

/// Integer power by repeated squaring.
template <typename Mat>
Mat matrix_power(const Mat& m, long long k) {
  Mat result = Mat::Identity(m.rows(), m.cols());
  Mat base = m;
  while (k > 0) {
    if (k & 1) result = (result * base).eval();
    k >>= 1;
    if (k > 0) base = (base * base).eval();
  }
  return result;
}

}  // namespace ldpx
