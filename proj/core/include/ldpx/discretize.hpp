#pragma once

#include <complex>

#include <Eigen/Dense>

#include "ldpx/grid.hpp"
#include "ldpx/model.hpp"

namespace ldpx {

using cplx = std::complex<double>;

enum class GeneratorTag { base, tilted };

/// G(z) = A + diag(z b + z^2 sigma^2 / 2) on a periodic grid.
///
/// The real stencil A is stored once; the complex diagonal is cheap to rebuild,
/// so re-tilting a generator does not touch the stencil.
struct GeneratorMatrix {
  Eigen::MatrixXd base;
  Eigen::VectorXd obs_drift;
  Eigen::VectorXd obs_var;
  cplx z{0.0, 0.0};
  GeneratorTag tag = GeneratorTag::base;

  Eigen::Index size() const { return base.rows(); }
  Eigen::VectorXcd potential() const;
  Eigen::MatrixXcd entries() const;
  /// Real matrix; only valid when z is real.
  Eigen::MatrixXd real_entries() const;
  bool is_real() const { return z.imag() == 0.0; }
  GeneratorMatrix retilted(cplx z_new) const;
};

/// Divergence-form central-difference discretization of the Stratonovich generator.
/// Throws PreconditionError when the grid cannot resolve the highest field harmonic.
GeneratorMatrix build_generator(const TorusDiffusionSpec& spec, const PeriodicGrid& grid);
GeneratorMatrix build_tilted_generator(const TorusDiffusionSpec& spec, const PeriodicGrid& grid, cplx z);

struct SemigroupOptions {
  /// Upper bound on t times the logarithmic max-norm of G, i.e. on log ||exp(tG)||.
  double log_norm_cap = 700.0;
};

/// exp(tG). Throws RangeError when the result could overflow.
Eigen::MatrixXcd semigroup_step(const GeneratorMatrix& G, double t, const SemigroupOptions& opts = {});
Eigen::MatrixXd semigroup_step_real(const GeneratorMatrix& G, double t, const SemigroupOptions& opts = {});
/// Plain matrix exponentials, exposed for reuse.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m);

/// Normalized null vector of A^T. Throws NumericalError if the kernel is not one-dimensional.
InvariantDensity invariant_density(const GeneratorMatrix& A, const PeriodicGrid& grid);
/// Stationary law of a row-stochastic matrix.
InvariantDensity invariant_density(const Eigen::MatrixXd& transition);

}  // namespace ldpx
