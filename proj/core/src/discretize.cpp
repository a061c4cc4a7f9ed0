#include "ldpx/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "ldpx/errors.hpp"

namespace ldpx {

Eigen::VectorXcd GeneratorMatrix::potential() const {
  return (z * obs_drift.cast<cplx>() + (0.5 * z * z) * obs_var.cast<cplx>()).eval();
}

Eigen::MatrixXcd GeneratorMatrix::entries() const {
  Eigen::MatrixXcd m = base.cast<cplx>();
  m.diagonal() += potential();
  return m;
}

Eigen::MatrixXd GeneratorMatrix::real_entries() const {
  if (!is_real()) throw PreconditionError("real_entries needs a real tilt");
  Eigen::MatrixXd m = base;
  const double x = z.real();
  m.diagonal() += x * obs_drift + (0.5 * x * x) * obs_var;
  return m;
}

GeneratorMatrix GeneratorMatrix::retilted(cplx z_new) const {
  GeneratorMatrix g = *this;
  g.z = z_new;
  g.tag = z_new == cplx{0.0, 0.0} ? GeneratorTag::base : GeneratorTag::tilted;
  return g;
}

namespace {

void check_resolution(const TorusDiffusionSpec& spec, const PeriodicGrid& grid) {
  if (grid.dim() != spec.dim) throw PreconditionError("grid dimension does not match the model");
  const int k = spec.max_harmonic();
  if (grid.n() < static_cast<std::size_t>(2 * k)) {
    throw PreconditionError("grid too coarse: n = " + std::to_string(grid.n()) +
                            " cannot resolve harmonic " + std::to_string(k) + " (need n >= " +
                            std::to_string(2 * k) + ")");
  }
}

void build_1d(const TorusDiffusionSpec& spec, const PeriodicGrid& grid, Eigen::MatrixXd& a) {
  const auto n = static_cast<Eigen::Index>(grid.n());
  const double h = grid.spacing();
  Eigen::VectorXd d(n);
  Eigen::VectorXd drift(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point x = grid.point(static_cast<std::size_t>(i));
    d[i] = spec.diffusion_matrix(x)[0];
    drift[i] = spec.divergence_form_drift(x)[0];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index ip = (i + 1) % n;
    const Eigen::Index im = (i + n - 1) % n;
    const double up = 0.5 * (d[i] + d[ip]);
    const double dn = 0.5 * (d[i] + d[im]);
    a(i, ip) += 0.5 * up / (h * h) + drift[i] / (2.0 * h);
    a(i, im) += 0.5 * dn / (h * h) - drift[i] / (2.0 * h);
  }
}

void build_2d(const TorusDiffusionSpec& spec, const PeriodicGrid& grid, Eigen::MatrixXd& a) {
  const auto n = static_cast<long long>(grid.n());
  const double h = grid.spacing();
  const auto size = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd dxx(size), dxy(size), dyy(size), bx(size), by(size);
  for (Eigen::Index k = 0; k < size; ++k) {
    const Point x = grid.point(static_cast<std::size_t>(k));
    const auto d = spec.diffusion_matrix(x);
    dxx[k] = d[0];
    dxy[k] = d[1];
    dyy[k] = d[3];
    const auto v = spec.divergence_form_drift(x);
    bx[k] = v[0];
    by[k] = v[1];
  }
  auto at = [&](long long i, long long j) { return static_cast<Eigen::Index>(grid.index(i, j)); };
  const double h2 = h * h;
  for (long long j = 0; j < n; ++j) {
    for (long long i = 0; i < n; ++i) {
      const Eigen::Index r = at(i, j);
      const Eigen::Index e = at(i + 1, j), w = at(i - 1, j), nn = at(i, j + 1), s = at(i, j - 1);
      a(r, e) += 0.25 * (dxx[r] + dxx[e]) / h2 + bx[r] / (2.0 * h);
      a(r, w) += 0.25 * (dxx[r] + dxx[w]) / h2 - bx[r] / (2.0 * h);
      a(r, nn) += 0.25 * (dyy[r] + dyy[nn]) / h2 + by[r] / (2.0 * h);
      a(r, s) += 0.25 * (dyy[r] + dyy[s]) / h2 - by[r] / (2.0 * h);
      // Mixed derivatives, half of d_x(D_xy d_y u) + d_y(D_xy d_x u).
      const double c = 0.5 / (4.0 * h2);
      a(r, at(i + 1, j + 1)) += c * (dxy[e] + dxy[nn]);
      a(r, at(i + 1, j - 1)) += c * (-dxy[e] - dxy[s]);
      a(r, at(i - 1, j + 1)) += c * (-dxy[w] - dxy[nn]);
      a(r, at(i - 1, j - 1)) += c * (dxy[w] + dxy[s]);
    }
  }
}

double log_norm(const GeneratorMatrix& g) {
  const Eigen::VectorXcd p = g.potential();
  double worst = -INFINITY;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    double row = g.base(i, i) + p[i].real();
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (j != i) row += std::abs(g.base(i, j));
    }
    worst = std::max(worst, row);
  }
  return worst;
}

void check_step(const GeneratorMatrix& g, double t, const SemigroupOptions& opts) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("semigroup time must be finite and nonnegative");
  if (!g.base.allFinite() || !g.obs_drift.allFinite() || !g.obs_var.allFinite()) {
    throw PreconditionError("generator has non-finite entries");
  }
  const double bound = t * log_norm(g);
  if (bound > opts.log_norm_cap) {
    throw RangeError("exp(tG) may overflow (t * lognorm = " + std::to_string(bound) +
                     "); split the time interval and renormalize between steps");
  }
}

}  // namespace

GeneratorMatrix build_generator(const TorusDiffusionSpec& spec, const PeriodicGrid& grid) {
  check_resolution(spec, grid);
  const auto size = static_cast<Eigen::Index>(grid.size());
  GeneratorMatrix g;
  g.base = Eigen::MatrixXd::Zero(size, size);
  if (grid.dim() == 1) {
    build_1d(spec, grid, g.base);
  } else {
    build_2d(spec, grid, g.base);
  }
  g.base.diagonal().setZero();
  g.base.diagonal() = -g.base.rowwise().sum();

  const auto b = spec.obs_drift.sample(grid.dim(), grid.n());
  const auto s = spec.obs_noise.sample(grid.dim(), grid.n());
  g.obs_drift = Eigen::Map<const Eigen::VectorXd>(b.data(), size);
  g.obs_var = Eigen::Map<const Eigen::VectorXd>(s.data(), size).array().square();
  return g;
}

GeneratorMatrix build_tilted_generator(const TorusDiffusionSpec& spec, const PeriodicGrid& grid, cplx z) {
  return build_generator(spec, grid).retilted(z);
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) { return m.exp(); }
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m) { return m.exp(); }

Eigen::MatrixXcd semigroup_step(const GeneratorMatrix& G, double t, const SemigroupOptions& opts) {
  check_step(G, t, opts);
  if (G.is_real()) return expm((t * G.real_entries()).eval()).cast<cplx>();
  return expm((t * G.entries()).eval());
}

Eigen::MatrixXd semigroup_step_real(const GeneratorMatrix& G, double t, const SemigroupOptions& opts) {
  check_step(G, t, opts);
  return expm((t * G.real_entries()).eval());
}

namespace {

InvariantDensity null_vector_density(const Eigen::MatrixXd& mt, double cell_volume) {
  const Eigen::Index n = mt.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(mt);
  if (lu.dimensionOfKernel() != 1) {
    throw NumericalError("stationary equation has a " + std::to_string(lu.dimensionOfKernel()) +
                         "-dimensional null space; the chain is not irreducible at this discretization");
  }
  Eigen::MatrixXd bordered = mt;
  bordered.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::VectorXd w = bordered.partialPivLu().solve(rhs);
  const double scale = w.cwiseAbs().maxCoeff();
  if (w.minCoeff() < -1e-10 * scale) throw NumericalError("stationary vector has negative entries");
  w = w.cwiseMax(0.0);
  w /= w.sum();
  InvariantDensity out;
  out.weights = std::move(w);
  out.cell_volume = cell_volume;
  out.residual = (mt * out.weights).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace

InvariantDensity invariant_density(const GeneratorMatrix& A, const PeriodicGrid& grid) {
  if (static_cast<std::size_t>(A.size()) != grid.size()) throw PreconditionError("generator does not match the grid");
  return null_vector_density(A.base.transpose(), grid.cell_volume());
}

InvariantDensity invariant_density(const Eigen::MatrixXd& transition) {
  const Eigen::Index n = transition.rows();
  if (n == 0 || transition.cols() != n) throw PreconditionError("transition matrix must be square");
  return null_vector_density(transition.transpose() - Eigen::MatrixXd::Identity(n, n), 1.0);
}

}  // namespace ldpx
