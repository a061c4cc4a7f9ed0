#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ldpx/tilted_family.hpp"

namespace ldpx {

struct SpectralOptions {
  /// Top pair counts as degenerate when gap < degenerate_tol * max(1, |mu|).
  double degenerate_tol = 1e-8;
  /// Finite-difference step for cumulant derivatives (one Richardson level on top).
  double fd_step = 1e-2;
  /// Allowed relative disagreement between the finite-difference and spectral derivatives.
  double derivative_rel_tol = 5e-3;
};

/// Top of the tilted spectrum at z: mu(z), right/left eigenvectors and the gap.
///
/// Normalization: max |g_i| = 1 with that entry real positive, and sum_i psi_i g_i = 1
/// (bilinear, so Pi = g psi^T is the spectral projector for complex z too).
struct SpectralTriple {
  cplx z;
  cplx mu;
  Eigen::VectorXcd g;
  Eigen::VectorXcd psi;
  /// Re mu minus the largest real exponent of the rest of the spectrum.
  double gap = 0.0;
  cplx runner_up;
  /// max-norm of U g - lambda g for the eigenvalue lambda of the underlying matrix.
  double residual = 0.0;

  double theta() const { return z.real(); }
  Eigen::VectorXd g_real() const { return g.real(); }
  Eigen::VectorXd psi_real() const { return psi.real(); }
  /// pi_theta = psi * g, the stationary law of the Doob-transformed process.
  Eigen::VectorXd tilted_stationary() const { return psi.cwiseProduct(g).real(); }
  Eigen::MatrixXcd projector() const { return g * psi.transpose(); }
};

/// Throws NumericalError naming both eigenvalues when the top pair is near-degenerate,
/// or when the Perron vector of a real tilt is not positive.
SpectralTriple top_eigen(const TiltedFamily& family, cplx z, const SpectralOptions& opts = {});
SpectralTriple top_eigen(const GeneratorMatrix& G, const SpectralOptions& opts = {});

/// Spectral exponents (eigenvalues of G, or logs of eigenvalues of M), unsorted.
Eigen::VectorXcd spectrum(const TiltedFamily& family, cplx z);
/// Exponent with the largest real part.
cplx top_exponent(const TiltedFamily& family, cplx z);

double cgf(const TiltedFamily& family, double theta);

/// Solution of the tilted Poisson problem and the resulting effective diffusivity.
struct Corrector {
  double theta = 0.0;
  Eigen::VectorXd f;
  double c_theta = 0.0;
  /// max-norm residual of the Poisson equation.
  double residual = 0.0;
  /// pi_theta-mean of the centred source; zero when the problem is solvable.
  double solvability = 0.0;
  double xi = 0.0;
};

Corrector solve_corrector(const TiltedFamily& family, const SpectralTriple& triple);

struct CgfDerivatives {
  double theta = 0.0;
  double mu = 0.0;
  /// Richardson-extrapolated central differences: the returned values.
  double d1 = 0.0;
  double d2 = 0.0;
  /// Cross-check: <psi, (b + theta sigma^2) g> and the corrector diffusivity.
  double d1_spectral = 0.0;
  double d2_spectral = 0.0;
};

/// Throws NumericalError when the two routes disagree beyond opts.derivative_rel_tol.
CgfDerivatives cgf_derivatives(const TiltedFamily& family, double theta, const SpectralOptions& opts = {});
/// Finite-difference route only (cheap; used inside root finding).
double cgf_d1_fd(const TiltedFamily& family, double theta, double h = 1e-2);
double cgf_d2_fd(const TiltedFamily& family, double theta, double h = 1e-2);
/// Spectral mu'(theta) = <psi, (b + theta sigma^2) g> from a triple at real theta.
double cgf_d1_spectral(const TiltedFamily& family, const SpectralTriple& triple);

struct GapSample {
  double s = 0.0;
  double gap_re = 0.0;
};

/// mu(theta) - max Re spec(G(theta + i s)) for each s. Throws PreconditionError on s == 0.
std::vector<GapSample> check_b3(const TiltedFamily& family, double theta, const std::vector<double>& s_list);

struct DecaySample {
  double s = 0.0;
  double t = 0.0;
  double ratio = 0.0;
};

struct DecayProfile {
  double theta = 0.0;
  std::vector<DecaySample> samples;
  double K = 0.0;
  double epsilon = 0.0;
  /// -log(1 - epsilon): decay exponent per unit time beyond K.
  double rate = 0.0;
};

/// ratio(s, t) = || D^-1 U(theta + i s, t) D ||_inf / e^{t mu(theta)} with D = diag(g_theta).
/// The Doob conjugation makes ratio(0, t) = 1. Throws ConditionError if no epsilon > 0 fits.
DecayProfile decay_profile(const TiltedFamily& family, double theta, const std::vector<double>& s_grid,
                           const std::vector<double>& t_grid);

struct DecompositionRow {
  double t = 0.0;
  /// || U e^{-t mu} - Pi - N(t) ||_inf with N(t) computed through the deflated operator.
  double consistency = 0.0;
  /// || N(t) ||_inf = || R(t) ||_inf e^{-t Re mu}.
  double remainder = 0.0;
  /// max over N = 2, 3 of || N(N t) - N(t)^N ||_inf.
  double power_residual = 0.0;
};

struct DecompositionReport {
  double theta = 0.0;
  double s = 0.0;
  cplx mu;
  double gap = 0.0;
  double projector_idempotence = 0.0;
  std::vector<DecompositionRow> rows;
  /// Per-unit-time decay factors of the remainder between consecutive resolvable rows.
  std::vector<double> decay_factors;
  /// Remainders below this are treated as numerically zero.
  double noise_floor = 1e-13;
};

/// Throws ConditionError when the remainder fails to decay or the semigroup law fails.
DecompositionReport decomposition_check(const TiltedFamily& family, double theta, double s,
                                        const std::vector<double>& t_list,
                                        const SpectralOptions& opts = {});

}  // namespace ldpx
