#include "ldpx/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ldpx/errors.hpp"
#include "ldpx/parallel.hpp"

namespace ldpx {
namespace {

Eigen::VectorXcd eigenvalues_of(const TiltedFamily& family, cplx z) {
  if (z.imag() == 0.0) {
    const Eigen::MatrixXd m = family.real_matrix(z.real());
    if (family.symmetric()) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
      return es.eigenvalues().cast<cplx>();
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
    return es.eigenvalues();
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(family.matrix(z), false);
  if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver failed");
  return es.eigenvalues();
}

struct TopPair {
  Eigen::Index top = 0;
  Eigen::Index second = -1;
};

TopPair rank_top(const Eigen::VectorXcd& exponents) {
  TopPair p;
  for (Eigen::Index k = 1; k < exponents.size(); ++k) {
    if (exponents[k].real() > exponents[p.top].real()) p.top = k;
  }
  for (Eigen::Index k = 0; k < exponents.size(); ++k) {
    if (k == p.top) continue;
    if (p.second < 0 || exponents[k].real() > exponents[p.second].real()) p.second = k;
  }
  return p;
}

std::string format_cplx(cplx v) {
  std::ostringstream os;
  os.precision(12);
  os << v.real();
  if (v.imag() != 0.0) os << (v.imag() < 0 ? " - " : " + ") << std::abs(v.imag()) << "i";
  return os.str();
}

template <typename Mat>
struct EigenvectorPair {
  using Vec = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>;
  Vec right;
  Vec left;
};

// Inverse iteration with a slightly perturbed shift; one LU serves both sides.
template <typename Mat>
EigenvectorPair<Mat> eigenvectors_near(const Mat& m, typename Mat::Scalar lambda) {
  using Scalar = typename Mat::Scalar;
  using Vec = typename EigenvectorPair<Mat>::Vec;
  const Eigen::Index n = m.rows();
  const double scale = std::max(1.0, std::abs(lambda));
  const Scalar shift = lambda + Scalar(1e-9 * scale);
  Mat shifted = m;
  shifted.diagonal().array() -= shift;
  Eigen::PartialPivLU<Mat> lu(shifted);

  auto iterate = [&](bool transpose) {
    Vec v = Vec::Ones(n);
    for (int it = 0; it < 60; ++it) {
      Vec next = transpose ? Vec(lu.transpose().solve(v)) : Vec(lu.solve(v));
      Eigen::Index idx = 0;
      next.cwiseAbs().maxCoeff(&idx);
      next /= next[idx];
      const double change = (next - v).cwiseAbs().maxCoeff();
      v = std::move(next);
      if (!v.allFinite()) throw NumericalError("inverse iteration diverged");
      if (change < 1e-15 && it > 0) break;
    }
    return v;
  };
  EigenvectorPair<Mat> out;
  out.right = iterate(false);
  out.left = iterate(true);
  return out;
}

template <typename Mat>
SpectralTriple analyze(const Mat& m, const TiltedFamily* family, bool discrete, cplx z,
                       const SpectralOptions& opts, const Eigen::VectorXcd& eigenvalues) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXcd exponents(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    exponents[k] = family ? family->exponent(eigenvalues[k])
                          : (discrete ? std::log(eigenvalues[k]) : eigenvalues[k]);
  }
  const TopPair pair = rank_top(exponents);
  SpectralTriple out;
  out.z = z;
  cplx lambda = eigenvalues[pair.top];
  out.mu = exponents[pair.top];
  if (pair.second >= 0) {
    out.runner_up = exponents[pair.second];
    out.gap = out.mu.real() - out.runner_up.real();
  } else {
    out.runner_up = {-INFINITY, 0.0};
    out.gap = INFINITY;
  }
  if (!(out.gap >= opts.degenerate_tol * std::max(1.0, std::abs(out.mu)))) {
    throw NumericalError("near-degenerate top of spectrum at z = " + format_cplx(z) + ": exponents " +
                         format_cplx(out.mu) + " and " + format_cplx(out.runner_up));
  }

  using Scalar = typename Mat::Scalar;
  Scalar lam;
  if constexpr (std::is_same_v<Scalar, double>) {
    lam = lambda.real();
  } else {
    lam = lambda;
  }
  auto pairv = eigenvectors_near(m, lam);
  Eigen::VectorXcd g = pairv.right.template cast<cplx>();
  Eigen::VectorXcd psi = pairv.left.template cast<cplx>();
  Eigen::Index idx = 0;
  g.cwiseAbs().maxCoeff(&idx);
  g /= g[idx];
  psi /= (psi.transpose() * g)(0, 0);
  const cplx refined = (psi.transpose() * m.template cast<cplx>() * g)(0, 0);
  out.residual = (m.template cast<cplx>() * g - refined * g).cwiseAbs().maxCoeff();
  out.mu = discrete ? std::log(refined) : refined;
  if (z.imag() == 0.0) {
    out.mu = out.mu.real();
    if (g.real().minCoeff() <= 0.0) {
      throw NumericalError("Perron eigenvector is not positive at theta = " + format_cplx(z));
    }
    g = g.real().cast<cplx>();
    psi = psi.real().cast<cplx>();
  }
  out.g = std::move(g);
  out.psi = std::move(psi);
  if (pair.second >= 0) out.gap = out.mu.real() - out.runner_up.real();
  return out;
}

}  // namespace

Eigen::VectorXcd spectrum(const TiltedFamily& family, cplx z) {
  Eigen::VectorXcd values = eigenvalues_of(family, z);
  for (Eigen::Index k = 0; k < values.size(); ++k) values[k] = family.exponent(values[k]);
  return values;
}

cplx top_exponent(const TiltedFamily& family, cplx z) {
  const Eigen::VectorXcd e = spectrum(family, z);
  return e[rank_top(e).top];
}

namespace {

// Symmetric generator: Rayleigh quotient in energy form,
//   g^T G g = -1/2 sum_{i != j} A_ij (g_i - g_j)^2 + sum_i V_i g_i^2,
// which avoids the eps * ||A|| ~ eps / h^2 cancellation of the plain eigenvalue.
double symmetric_cgf(const GeneratorMatrix& gen, double theta) {
  const Eigen::MatrixXd m = gen.retilted(theta).real_entries();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  const Eigen::VectorXd g = es.eigenvectors().col(m.rows() - 1);
  const Eigen::VectorXd pot = theta * gen.obs_drift + (0.5 * theta * theta) * gen.obs_var;
  double energy = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
      const double a = gen.base(i, j);
      if (a != 0.0) energy += a * (g[i] - g[j]) * (g[i] - g[j]);
    }
  }
  return (pot.dot(g.cwiseAbs2()) - energy) / g.squaredNorm();
}

}  // namespace

double cgf(const TiltedFamily& family, double theta) {
  if (!std::isfinite(theta)) throw PreconditionError("theta must be finite");
  if (family.symmetric() && family.generator()) return symmetric_cgf(*family.generator(), theta);
  return top_exponent(family, theta).real();
}

SpectralTriple top_eigen(const TiltedFamily& family, cplx z, const SpectralOptions& opts) {
  const Eigen::VectorXcd values = eigenvalues_of(family, z);
  if (z.imag() == 0.0) {
    return analyze(family.real_matrix(z.real()), &family, family.discrete(), z, opts, values);
  }
  return analyze(family.matrix(z), &family, family.discrete(), z, opts, values);
}

SpectralTriple top_eigen(const GeneratorMatrix& G, const SpectralOptions& opts) {
  if (G.is_real()) {
    const Eigen::MatrixXd m = G.real_entries();
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
    return analyze(m, nullptr, false, G.z, opts, es.eigenvalues());
  }
  const Eigen::MatrixXcd m = G.entries();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("complex eigensolver failed");
  return analyze(m, nullptr, false, G.z, opts, es.eigenvalues());
}

double cgf_d1_fd(const TiltedFamily& family, double theta, double h) {
  auto d = [&](double step) { return (cgf(family, theta + step) - cgf(family, theta - step)) / (2.0 * step); };
  return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

double cgf_d2_fd(const TiltedFamily& family, double theta, double h) {
  const double m0 = cgf(family, theta);
  auto d = [&](double step) {
    return (cgf(family, theta + step) - 2.0 * m0 + cgf(family, theta - step)) / (step * step);
  };
  return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

double cgf_d1_spectral(const TiltedFamily& family, const SpectralTriple& triple) {
  const Eigen::VectorXd g = triple.g_real();
  const Eigen::VectorXd psi = triple.psi_real();
  const double theta = triple.theta();
  if (const auto* gen = family.generator()) {
    const Eigen::VectorXd r = gen->obs_drift + theta * gen->obs_var;
    return psi.dot(r.cwiseProduct(g));
  }
  const Eigen::MatrixXd dm = family.real_derivative(theta);
  return psi.dot(dm * g) / std::exp(triple.mu.real());
}

Corrector solve_corrector(const TiltedFamily& family, const SpectralTriple& triple) {
  if (triple.z.imag() != 0.0) throw PreconditionError("the corrector needs a real tilt");
  const double theta = triple.theta();
  const Eigen::Index n = family.size();
  const Eigen::VectorXd g = triple.g_real();
  Eigen::VectorXd pi = triple.tilted_stationary();
  pi /= pi.sum();

  // Generator of the Doob-transformed process (continuous time) or P~ - I (discrete time).
  Eigen::MatrixXd gen(n, n);
  Eigen::VectorXd source(n);
  Eigen::MatrixXd xbar;
  const Eigen::MatrixXd m = family.real_matrix(theta);
  if (family.generator()) {
    gen = g.cwiseInverse().asDiagonal() * m * g.asDiagonal();
    source = family.generator()->obs_drift + theta * family.generator()->obs_var;
  } else {
    gen = (g.cwiseInverse().asDiagonal() * m * g.asDiagonal()) / std::exp(triple.mu.real());
    const auto& c = *family.chain_spec();
    xbar = c.transition_increment;
    xbar.colwise() += c.increment_mean + theta * c.increment_var;
    // Rows of P~ are probabilities; renormalize away eigenvector round-off.
    gen = gen.array().colwise() / gen.rowwise().sum().array();
    source = gen.cwiseProduct(xbar).rowwise().sum();
  }
  gen.diagonal().setZero();
  gen.diagonal() = -gen.rowwise().sum();

  Corrector out;
  out.theta = theta;
  out.c_theta = pi.dot(source);
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, out.c_theta) - source;
  out.solvability = pi.dot(-rhs);

  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(n + 1, n + 1);
  bordered.topLeftCorner(n, n) = gen;
  bordered.topRightCorner(n, 1).setOnes();
  bordered.bottomLeftCorner(1, n) = pi.transpose();
  Eigen::VectorXd b(n + 1);
  b.head(n) = rhs;
  b[n] = 0.0;
  const Eigen::VectorXd sol = bordered.partialPivLu().solve(b);
  out.f = sol.head(n);
  out.residual = (gen * out.f - rhs).cwiseAbs().maxCoeff();

  const Eigen::VectorXd& var = family.noise_var();
  double xi = 0.0;
  if (family.generator()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double carre = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i || gen(i, j) == 0.0) continue;
        const double d = out.f[j] - out.f[i];
        carre += gen(i, j) * d * d;
      }
      xi += pi[i] * (var[i] + carre);
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p = gen(i, j) + (i == j ? 1.0 : 0.0);
        if (p == 0.0) continue;
        const double d = xbar(i, j) + out.f[j] - out.f[i] - out.c_theta;
        row += p * (var[i] + d * d);
      }
      xi += pi[i] * row;
    }
  }
  out.xi = xi;
  return out;
}

CgfDerivatives cgf_derivatives(const TiltedFamily& family, double theta, const SpectralOptions& opts) {
  CgfDerivatives out;
  out.theta = theta;
  const double h = opts.fd_step;
  const double m0 = cgf(family, theta);
  const double p1 = cgf(family, theta + h), m1 = cgf(family, theta - h);
  const double p2 = cgf(family, theta + 0.5 * h), m2 = cgf(family, theta - 0.5 * h);
  out.mu = m0;
  const double d1h = (p1 - m1) / (2.0 * h), d1h2 = (p2 - m2) / h;
  const double d2h = (p1 - 2.0 * m0 + m1) / (h * h), d2h2 = (p2 - 2.0 * m0 + m2) / (0.25 * h * h);
  out.d1 = (4.0 * d1h2 - d1h) / 3.0;
  out.d2 = (4.0 * d2h2 - d2h) / 3.0;

  const SpectralTriple triple = top_eigen(family, theta, opts);
  out.d1_spectral = cgf_d1_spectral(family, triple);
  out.d2_spectral = solve_corrector(family, triple).xi;

  const double tol = opts.derivative_rel_tol;
  const double d1_err = std::abs(out.d1 - out.d1_spectral);
  const double d2_err = std::abs(out.d2 - out.d2_spectral);
  if (d1_err > tol * std::abs(out.d1) + 1e-7 * std::max(1.0, std::abs(out.d2)) ||
      d2_err > tol * std::abs(out.d2)) {
    std::ostringstream os;
    os.precision(10);
    os << "cumulant derivatives disagree at theta = " << theta << ": finite differences (" << out.d1 << ", "
       << out.d2 << ") vs spectral (" << out.d1_spectral << ", " << out.d2_spectral << ")";
    throw NumericalError(os.str());
  }
  return out;
}

std::vector<GapSample> check_b3(const TiltedFamily& family, double theta, const std::vector<double>& s_list) {
  for (double s : s_list) {
    if (s == 0.0) throw PreconditionError("check_b3 needs s != 0");
  }
  const double mu = cgf(family, theta);
  std::vector<GapSample> out(s_list.size());
  parallel_for(s_list.size(), [&](std::size_t k) {
    out[k].s = s_list[k];
    out[k].gap_re = mu - top_exponent(family, cplx{theta, s_list[k]}).real();
  });
  return out;
}

DecayProfile decay_profile(const TiltedFamily& family, double theta, const std::vector<double>& s_grid,
                           const std::vector<double>& t_grid) {
  if (s_grid.empty() || t_grid.empty()) throw PreconditionError("decay_profile needs nonempty grids");
  const SpectralTriple triple = top_eigen(family, theta);
  const Eigen::VectorXd g = triple.g_real();
  const double mu = triple.mu.real();
  DecayProfile out;
  out.theta = theta;
  out.samples.resize(s_grid.size() * t_grid.size());
  parallel_for(out.samples.size(), [&](std::size_t k) {
    const double s = s_grid[k / t_grid.size()];
    const double t = t_grid[k % t_grid.size()];
    const Eigen::MatrixXcd u = family.propagator(cplx{theta, s}, t, mu);
    const Eigen::VectorXd rows = (u.cwiseAbs() * g).cwiseQuotient(g);
    out.samples[k] = {s, t, rows.maxCoeff()};
  });

  constexpr double kFlat = 1.0 - 1e-9;
  for (const auto& smp : out.samples) {
    if (smp.ratio >= kFlat) out.K = std::max(out.K, std::abs(smp.s));
  }
  double worst = -1.0;
  for (const auto& smp : out.samples) {
    const double steps = std::floor(smp.t);
    if (std::abs(smp.s) <= out.K || steps < 1.0) continue;
    worst = std::max(worst, std::pow(smp.ratio, 1.0 / steps));
  }
  if (worst < 0.0) {
    throw ConditionError("decay fit failed: no samples with |s| > K = " + std::to_string(out.K) +
                         " and t >= 1 decay");
  }
  out.epsilon = 1.0 - worst;
  if (!(out.epsilon > 0.0)) throw ConditionError("decay fit failed: no epsilon > 0 bounds the ratios");
  out.rate = -std::log1p(-out.epsilon);
  return out;
}

DecompositionReport decomposition_check(const TiltedFamily& family, double theta, double s,
                                        const std::vector<double>& t_list, const SpectralOptions& opts) {
  const cplx z{theta, s};
  const SpectralTriple triple = top_eigen(family, z, opts);
  DecompositionReport out;
  out.theta = theta;
  out.s = s;
  out.mu = triple.mu;
  out.gap = triple.gap;
  const Eigen::Index n = family.size();
  const Eigen::MatrixXcd proj = triple.projector();
  const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd complement = eye - proj;
  out.projector_idempotence = (proj * proj - proj).cwiseAbs().rowwise().sum().maxCoeff();

  // Deflation moves the top eigenvalue far left so the remainder is computed without
  // subtracting two nearly equal matrices.
  const Eigen::MatrixXcd m = family.matrix(z);
  Eigen::MatrixXcd deflated;
  if (family.discrete()) {
    deflated = (m - std::exp(triple.mu) * proj) * std::exp(-triple.mu);
  } else {
    const double sink = std::isfinite(triple.runner_up.real()) ? triple.runner_up.real() - 10.0 : triple.mu.real() - 10.0;
    deflated = m - (triple.mu - sink) * proj;
    deflated.diagonal().array() -= triple.mu;
  }
  auto remainder = [&](double t) -> Eigen::MatrixXcd {
    family.check_time(t);
    if (family.discrete()) return matrix_power<Eigen::MatrixXcd>(deflated, static_cast<long long>(t)) * complement;
    return expm((t * deflated).eval()) * complement;
  };
  auto norm = [](const Eigen::MatrixXcd& a) { return a.cwiseAbs().rowwise().sum().maxCoeff(); };

  for (double t : t_list) {
    DecompositionRow row;
    row.t = t;
    const Eigen::MatrixXcd u = family.propagator(z, t, triple.mu);
    const Eigen::MatrixXcd r1 = remainder(t);
    row.consistency = norm(u - proj - r1);
    row.remainder = norm(r1);
    const Eigen::MatrixXcd r2 = remainder(2.0 * t);
    const Eigen::MatrixXcd r3 = remainder(3.0 * t);
    row.power_residual = std::max(norm(r2 - r1 * r1), norm(r3 - r1 * r1 * r1));
    out.rows.push_back(row);
  }

  std::vector<DecompositionRow> sorted = out.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
    const auto& a = sorted[k];
    const auto& b = sorted[k + 1];
    if (b.t <= a.t || a.remainder < out.noise_floor || b.remainder < out.noise_floor) continue;
    out.decay_factors.push_back(std::pow(b.remainder / a.remainder, 1.0 / (b.t - a.t)));
  }
  for (double q : out.decay_factors) {
    if (!(q < 1.0)) throw ConditionError("remainder does not decay (factor " + std::to_string(q) + ")");
  }
  for (const auto& row : out.rows) {
    if (row.power_residual > 1e-8) {
      throw ConditionError("remainder violates the semigroup law at t = " + std::to_string(row.t) +
                           " (residual " + std::to_string(row.power_residual) + ")");
    }
  }
  return out;
}

}  // namespace ldpx
