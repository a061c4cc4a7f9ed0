#include "ldpx/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldpx/errors.hpp"

namespace ldpx {

PeriodicGrid::PeriodicGrid(int dim, std::size_t n) : dim_(dim), n_(n) {
  if (dim != 1 && dim != 2) throw PreconditionError("grid dimension must be 1 or 2");
  if (n < 8 || n % 2 != 0) {
    throw PreconditionError("grid needs an even number of points per axis, at least 8 (got " +
                            std::to_string(n) + ")");
  }
}

std::size_t PeriodicGrid::index(long long i, long long j) const {
  const auto n = static_cast<long long>(n_);
  i %= n;
  if (i < 0) i += n;
  if (dim_ == 1) return static_cast<std::size_t>(i);
  j %= n;
  if (j < 0) j += n;
  return static_cast<std::size_t>(i + n * j);
}

Point PeriodicGrid::point(std::size_t flat) const {
  const double h = spacing();
  if (dim_ == 1) return {static_cast<double>(flat) * h, 0.0};
  return {static_cast<double>(flat % n_) * h, static_cast<double>(flat / n_) * h};
}

std::size_t PeriodicGrid::nearest(const Point& x) const {
  const double nd = static_cast<double>(n_);
  const auto i = static_cast<long long>(std::llround(x[0] * nd));
  const auto j = static_cast<long long>(std::llround(x[1] * nd));
  return index(i, j);
}

std::array<double, 4> TorusDiffusionSpec::diffusion_matrix(const Point& x) const {
  std::array<double, 4> d{0.0, 0.0, 0.0, 0.0};
  for (const auto& v : diffusion) {
    const double a = v[0](x);
    const double b = dim == 2 ? v[1](x) : 0.0;
    d[0] += a * a;
    d[1] += a * b;
    d[2] += a * b;
    d[3] += b * b;
  }
  return d;
}

std::array<double, 2> TorusDiffusionSpec::divergence_form_drift(const Point& x) const {
  std::array<double, 2> out{drift[0](x), dim == 2 ? drift[1](x) : 0.0};
  for (const auto& v : diffusion) {
    const auto g0 = v[0].gradient(x);
    double div = g0[0];
    double vy = 0.0;
    if (dim == 2) {
      div += v[1].gradient(x)[1];
      vy = v[1](x);
    }
    out[0] -= 0.5 * div * v[0](x);
    out[1] -= 0.5 * div * vy;
  }
  return out;
}

std::array<double, 2> TorusDiffusionSpec::ito_drift(const Point& x) const {
  std::array<double, 2> out{drift[0](x), dim == 2 ? drift[1](x) : 0.0};
  for (const auto& v : diffusion) {
    const double vx = v[0](x);
    const auto gx = v[0].gradient(x);
    if (dim == 1) {
      out[0] += 0.5 * vx * gx[0];
      continue;
    }
    const double vy = v[1](x);
    const auto gy = v[1].gradient(x);
    out[0] += 0.5 * (vx * gx[0] + vy * gx[1]);
    out[1] += 0.5 * (vx * gy[0] + vy * gy[1]);
  }
  return out;
}

bool TorusDiffusionSpec::constant_diffusion() const {
  return std::all_of(diffusion.begin(), diffusion.end(), [](const VectorField& v) {
    return v[0].is_constant() && v[1].is_constant();
  });
}

int TorusDiffusionSpec::max_harmonic() const {
  int k = std::max({drift[0].max_harmonic(), drift[1].max_harmonic(), obs_drift.max_harmonic(),
                    obs_noise.max_harmonic()});
  for (const auto& v : diffusion) k = std::max({k, v[0].max_harmonic(), v[1].max_harmonic()});
  return k;
}

bool DiscreteChainSpec::lattice() const {
  if (increment_var.size() > 0 && increment_var.cwiseAbs().maxCoeff() > 0.0) return false;
  auto integral = [](double v) { return std::abs(v - std::round(v)) < 1e-12; };
  for (Eigen::Index i = 0; i < transition_increment.size(); ++i) {
    if (!integral(transition_increment.data()[i])) return false;
  }
  for (Eigen::Index i = 0; i < increment_mean.size(); ++i) {
    if (!integral(increment_mean[i])) return false;
  }
  return true;
}

bool DiscreteChainSpec::gaussian() const {
  return increment_var.size() > 0 && increment_var.minCoeff() > 0.0;
}

std::size_t EvaluationFrame::resolve_start(const PeriodicGrid& grid) const {
  if (start_point) return grid.nearest(*start_point);
  return start_index;
}

Eigen::VectorXd EvaluationFrame::resolve_test_vector(const PeriodicGrid& grid) const {
  const auto size = grid.size();
  if (test_vector.is_ones()) return Eigen::VectorXd::Ones(static_cast<Eigen::Index>(size));
  if (const auto* values = std::get_if<std::vector<double>>(&test_vector.source)) {
    if (values->size() != size) {
      throw PreconditionError("test vector has " + std::to_string(values->size()) +
                              " entries, grid has " + std::to_string(size));
    }
    return Eigen::Map<const Eigen::VectorXd>(values->data(), static_cast<Eigen::Index>(size));
  }
  const auto& f = std::get<PeriodicFunction>(test_vector.source);
  const auto samples = f.sample(grid.dim(), grid.n());
  return Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(size));
}

Eigen::VectorXd EvaluationFrame::resolve_test_vector(std::size_t n_states) const {
  const auto n = static_cast<Eigen::Index>(n_states);
  if (test_vector.is_ones()) return Eigen::VectorXd::Ones(n);
  if (const auto* values = std::get_if<std::vector<double>>(&test_vector.source)) {
    if (values->size() != n_states) {
      throw PreconditionError("test vector has " + std::to_string(values->size()) +
                              " entries, chain has " + std::to_string(n_states) + " states");
    }
    return Eigen::Map<const Eigen::VectorXd>(values->data(), n);
  }
  throw PreconditionError("function-valued test vectors need a torus grid");
}

namespace {

std::string seam_issue(const std::string& name, const SeamCheck& c) {
  std::ostringstream os;
  os << "field " << name << " is not periodic across the seam (difference order " << c.worst_order
     << ", ratio " << c.worst_ratio << ")";
  return os.str();
}

void check_field(const std::string& name, const PeriodicFunction& f, int dim,
                 ValidationReport& report) {
  if (f.min_dim() > dim) {
    report.issues.push_back("field " + name + " depends on y but the model is one-dimensional");
  }
  const auto seam = f.seam_check();
  if (!seam.ok) report.issues.push_back(seam_issue(name, seam));
}

}  // namespace

ValidationReport validate_spec(const TorusDiffusionSpec& spec, std::size_t grid_n) {
  ValidationReport report;
  if (spec.dim != 1 && spec.dim != 2) {
    report.issues.push_back("dim must be 1 or 2");
    return report;
  }
  if (spec.diffusion.empty()) report.issues.push_back("at least one diffusion field V_i is required");

  for (std::size_t i = 0; i < spec.diffusion.size(); ++i) {
    check_field("V" + std::to_string(i + 1) + ".x", spec.diffusion[i][0], spec.dim, report);
    if (spec.dim == 2) check_field("V" + std::to_string(i + 1) + ".y", spec.diffusion[i][1], spec.dim, report);
  }
  check_field("V0.x", spec.drift[0], spec.dim, report);
  if (spec.dim == 2) check_field("V0.y", spec.drift[1], spec.dim, report);
  check_field("b", spec.obs_drift, spec.dim, report);
  check_field("sigma", spec.obs_noise, spec.dim, report);

  if (grid_n < 8) return report;
  const PeriodicGrid grid(spec.dim, grid_n % 2 == 0 ? grid_n : grid_n + 1);
  double min_sigma2 = INFINITY;
  double min_diff_eig = INFINITY;
  bool finite = true;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point x = grid.point(k);
    const double s = spec.obs_noise(x);
    finite = finite && std::isfinite(s) && std::isfinite(spec.obs_drift(x));
    min_sigma2 = std::min(min_sigma2, s * s);
    const auto d = spec.diffusion_matrix(x);
    double eig = d[0];
    if (spec.dim == 2) {
      const double tr = d[0] + d[3];
      const double det = d[0] * d[3] - d[1] * d[2];
      eig = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
    }
    min_diff_eig = std::min(min_diff_eig, eig);
  }
  if (!finite) report.issues.push_back("observable fields are not finite on the grid");
  if (!(min_sigma2 > 1e-14)) {
    report.issues.push_back("degenerate observable noise: min sigma^2 = " + std::to_string(min_sigma2));
  }
  if (!(min_diff_eig > 1e-14)) {
    report.issues.push_back(
        "degenerate diffusion: sum V_i V_i^T is not positive definite on the grid "
        "(hypoelliptic instances are not supported numerically)");
  }
  return report;
}

ValidationReport validate_spec(const DiscreteChainSpec& spec) {
  ValidationReport report;
  const auto& P = spec.transition;
  const auto n = P.rows();
  if (n == 0 || P.cols() != n) {
    report.issues.push_back("transition matrix must be square and nonempty");
    return report;
  }
  if (!P.allFinite()) report.issues.push_back("transition matrix has non-finite entries");
  if (P.minCoeff() < 0.0) report.issues.push_back("transition matrix has negative entries");
  const double row_err = (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_err > 1e-12) {
    report.issues.push_back("transition matrix is not row-stochastic (max |row sum - 1| = " +
                            std::to_string(row_err) + ")");
  }
  if (spec.transition_increment.rows() != n || spec.transition_increment.cols() != n) {
    report.issues.push_back("per-transition increments must be an n x n matrix");
  }
  if (spec.increment_mean.size() != n) report.issues.push_back("increment mean must have n entries");
  if (spec.increment_var.size() != n) {
    report.issues.push_back("increment variance must have n entries");
  } else if (spec.increment_var.minCoeff() < 0.0) {
    report.issues.push_back("increment variance must be nonnegative");
  }
  if (!report.ok()) return report;
  if (!(P.minCoeff() > 0.0)) {
    report.warnings.push_back("transition matrix has zero entries; spectral-gap guarantees need strict positivity");
  }
  const bool any_var = spec.increment_var.maxCoeff() > 0.0;
  if (!spec.lattice() && !spec.gaussian()) {
    report.warnings.push_back(
        any_var ? "some states have zero increment variance; tail inversion needs all positive"
                : "deterministic increments are not integer-valued; tail inversion unsupported");
  }
  return report;
}

ValidationReport validate_spec(const ModelSpec& spec, std::size_t grid_n) {
  return std::visit(
      [&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, TorusDiffusionSpec>) {
          return validate_spec(s, grid_n);
        } else {
          return validate_spec(s);
        }
      },
      spec);
}

ValidationReport validate_frame(const EvaluationFrame& frame, const ModelSpec& spec,
                                std::size_t grid_n) {
  ValidationReport report = validate_spec(spec, grid_n);
  Eigen::VectorXd v;
  try {
    if (const auto* torus = std::get_if<TorusDiffusionSpec>(&spec)) {
      const PeriodicGrid grid(torus->dim, grid_n);
      if (frame.resolve_start(grid) >= grid.size()) report.issues.push_back("start index out of range");
      v = frame.resolve_test_vector(grid);
    } else {
      const auto& chain = std::get<DiscreteChainSpec>(spec);
      if (frame.start_point) report.issues.push_back("chains take a start state index, not a point");
      if (frame.start_index >= chain.n_states()) report.issues.push_back("start state out of range");
      v = frame.resolve_test_vector(chain.n_states());
    }
  } catch (const Error& e) {
    report.issues.push_back(e.what());
    return report;
  }
  if (!v.allFinite()) report.issues.push_back("test vector has non-finite entries");
  if (v.size() > 0 && v.cwiseAbs().maxCoeff() == 0.0) report.issues.push_back("test vector is identically zero");
  return report;
}

namespace {

void check_density(const InvariantDensity& density) {
  if (density.weights.size() == 0 || density.weights.minCoeff() < 0.0) {
    throw PreconditionError("invariant density must be nonnegative");
  }
  if (std::abs(density.weights.sum() - 1.0) > 1e-10) {
    throw PreconditionError("invariant density is not normalized");
  }
}

}  // namespace

TorusDiffusionSpec center_observable(const TorusDiffusionSpec& spec, const InvariantDensity& density,
                                     const PeriodicGrid& grid) {
  check_density(density);
  if (static_cast<std::size_t>(density.weights.size()) != grid.size()) {
    throw PreconditionError("density size does not match the grid");
  }
  const auto b = spec.obs_drift.sample(grid.dim(), grid.n());
  const Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
  const double mean = density.weights.dot(bv);
  TorusDiffusionSpec out = spec;
  out.obs_drift = spec.obs_drift.shifted(-mean);
  return out;
}

DiscreteChainSpec center_observable(const DiscreteChainSpec& spec, const InvariantDensity& density) {
  check_density(density);
  if (density.weights.size() != spec.transition.rows()) {
    throw PreconditionError("density size does not match the chain");
  }
  const Eigen::VectorXd step_mean =
      spec.transition.cwiseProduct(spec.transition_increment).rowwise().sum() + spec.increment_mean;
  const double mean = density.weights.dot(step_mean);
  DiscreteChainSpec out = spec;
  out.increment_mean.array() -= mean;
  return out;
}

}  // namespace ldpx
