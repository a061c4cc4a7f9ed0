#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "ldpx/errors.hpp"
#include "ldpx/expansion.hpp"
#include "ldpx/parallel.hpp"

namespace ldpx {
namespace {

constexpr double kPi = std::numbers::pi;

double pow2_floor(double x) { return std::exp2(std::floor(std::log2(x))); }

// Golub-Welsch Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
    const double v0 = es.eigenvectors()(0, k);
    weights[static_cast<std::size_t>(k)] = 2.0 * v0 * v0;
  }
}

}  // namespace

Observation resolve_observation(const EvaluationFrame& frame, const TiltedFamily& family) {
  Observation obs;
  if (const auto& grid = family.grid()) {
    obs.start = frame.resolve_start(*grid);
    obs.v = frame.resolve_test_vector(*grid);
  } else {
    if (frame.start_point) throw PreconditionError("chains take a start state index, not a point");
    obs.start = frame.start_index;
    obs.v = frame.resolve_test_vector(static_cast<std::size_t>(family.size()));
  }
  if (obs.start >= static_cast<std::size_t>(family.size())) throw PreconditionError("start index out of range");
  if (obs.v.size() != family.size()) throw PreconditionError("test vector size does not match the model");
  if (!obs.v.allFinite() || obs.v.cwiseAbs().maxCoeff() == 0.0) {
    throw PreconditionError("test vector must be finite and not identically zero");
  }
  return obs;
}

cplx mgf(const TiltedFamily& family, const Observation& obs, cplx z, double t, const MgfOptions& opts) {
  family.check_time(t);
  if (t == 0.0) return obs.v[static_cast<Eigen::Index>(obs.start)];
  const double growth = t * cgf(family, z.real());
  if (growth > opts.log_cap) {
    throw RangeError("mgf overflows (t mu = " + std::to_string(growth) + "); use the log-domain mgf");
  }
  const Eigen::MatrixXcd u = family.propagator(z, t);
  return (u.row(static_cast<Eigen::Index>(obs.start)) * obs.v.cast<cplx>())(0, 0);
}

cplx log_mgf(const TiltedFamily& family, const Observation& obs, cplx z, double t) {
  family.check_time(t);
  const double shift = cgf(family, z.real());
  const Eigen::MatrixXcd u = family.propagator(z, t, shift);
  const cplx w = (u.row(static_cast<Eigen::Index>(obs.start)) * obs.v.cast<cplx>())(0, 0);
  return std::log(w) + t * shift;
}

TestFunction TestFunction::gaussian_window(double amplitude, double width) {
  if (!(width > 0.0)) throw PreconditionError("window width must be positive");
  TestFunction f;
  f.kind_ = Kind::gaussian_window;
  f.amplitude_ = amplitude;
  f.parameter_ = width;
  return f;
}

TestFunction TestFunction::one_sided_exponential(double amplitude, double beta) {
  if (!(beta > 0.0)) throw PreconditionError("exponential rate must be positive");
  TestFunction f;
  f.kind_ = Kind::one_sided_exponential;
  f.amplitude_ = amplitude;
  f.parameter_ = beta;
  return f;
}

TestFunction TestFunction::compact_bump(double amplitude, double radius) {
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  TestFunction f;
  f.kind_ = Kind::compact_bump;
  f.amplitude_ = amplitude;
  f.parameter_ = radius;
  gauss_legendre(160, f.nodes_, f.weights_);
  return f;
}

std::string TestFunction::name() const {
  switch (kind_) {
    case Kind::gaussian_window:
      return "gaussian_window";
    case Kind::one_sided_exponential:
      return "one_sided_exponential";
    case Kind::compact_bump:
      return "compact_bump";
  }
  return "unknown";
}

double TestFunction::alpha() const {
  return kind_ == Kind::one_sided_exponential ? parameter_ : INFINITY;
}

int TestFunction::smoothness() const { return kind_ == Kind::one_sided_exponential ? 0 : -1; }

double TestFunction::operator()(double x) const {
  switch (kind_) {
    case Kind::gaussian_window:
      return amplitude_ * std::exp(-x * x / (2.0 * parameter_ * parameter_));
    case Kind::one_sided_exponential:
      return x >= 0.0 ? amplitude_ * std::exp(-parameter_ * x) : 0.0;
    case Kind::compact_bump: {
      const double u = x / parameter_;
      return std::abs(u) < 1.0 ? amplitude_ * std::exp(-1.0 / (1.0 - u * u)) : 0.0;
    }
  }
  return 0.0;
}

cplx TestFunction::laplace(cplx z) const {
  switch (kind_) {
    case Kind::gaussian_window: {
      const double w = parameter_;
      return amplitude_ * w * std::sqrt(2.0 * kPi) * std::exp(0.5 * z * z * w * w);
    }
    case Kind::one_sided_exponential:
      return amplitude_ / (z + parameter_);
    case Kind::compact_bump: {
      cplx sum = 0.0;
      for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const double x = parameter_ * nodes_[k];
        sum += weights_[k] * (*this)(x) * std::exp(-z * x);
      }
      return parameter_ * sum;
    }
  }
  return 0.0;
}

double TestFunction::pole_distance(double theta) const {
  return kind_ == Kind::one_sided_exponential ? theta + parameter_ : INFINITY;
}

TestFunction TestFunction::scaled(double factor) const {
  TestFunction f = *this;
  f.amplitude_ *= factor;
  return f;
}

SaddleLine::SaddleLine(const TiltedFamily& family, Observation obs, double theta, InversionOptions opts)
    : family_(family), obs_(std::move(obs)), theta_(theta), opts_(opts) {
  if (!(theta > 0.0)) throw RangeError("the inversion contour needs theta > 0");
  mu_ = cgf(family, theta);
  curvature_ = cgf_d2_fd(family, theta);
  if (!(curvature_ > 0.0)) throw ConditionError("mu'' <= 0 on the inversion contour");
}

long long SaddleLine::key(double s) { return std::llround(std::ldexp(s, 40)); }

std::size_t SaddleLine::cached_nodes() const { return cache_.size(); }

void SaddleLine::ensure(const std::vector<double>& s_list) {
  std::vector<double> missing;
  for (double s : s_list) {
    if (!cache_.count(key(s))) missing.push_back(s);
  }
  std::sort(missing.begin(), missing.end());
  missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
  std::vector<Node> fresh(missing.size());
  const Eigen::VectorXcd v = obs_.v.cast<cplx>();
  const auto start = static_cast<Eigen::Index>(obs_.start);
  parallel_for(missing.size(), [&](std::size_t k) {
    Node& node = fresh[k];
    node.z = cplx{theta_, missing[k]};
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(family_.matrix(node.z), true);
    if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed on the inversion contour");
    const Eigen::MatrixXcd& r = es.eigenvectors();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(r);
    if (lu.rcond() < 1e-12) {
      // Nearly defective: fall back to direct propagation for this node.
      node.direct = true;
      return;
    }
    const Eigen::VectorXcd y = lu.solve(v);
    node.lambda = es.eigenvalues();
    node.coef = r.row(start).transpose().cwiseProduct(y);
  });
  for (std::size_t k = 0; k < missing.size(); ++k) cache_.emplace(key(missing[k]), std::move(fresh[k]));
}

cplx SaddleLine::spectral_sum(const Node& node, double t) {
  if (node.direct) {
    const Eigen::MatrixXcd u = family_.propagator(node.z, t, mu_);
    return (u.row(static_cast<Eigen::Index>(obs_.start)) * obs_.v.cast<cplx>())(0, 0);
  }
  cplx sum = 0.0;
  for (Eigen::Index k = 0; k < node.lambda.size(); ++k) {
    sum += node.coef[k] * family_.normalized_power(node.lambda[k], mu_, t);
  }
  return sum;
}

InversionResult SaddleLine::integrate_line(const Kernel& kernel, double pole_distance, double a, double t) {
  const double rate = a * theta_ - mu_;
  const double w = 1.0 / std::sqrt(t * curvature_);
  const double strip = std::min(pole_distance, theta_ + 1.0);
  const double alias = opts_.alias_exponent;
  double h = pow2_floor(std::min(2.0 * kPi * strip / (std::max(rate * t, 0.0) + alias),
                                 2.0 * kPi * w / std::sqrt(2.0 * alias)));
  double s_max = 8.0 * w;

  InversionResult res;
  double previous = 0.0;
  for (int round = 0; round < opts_.max_rounds; ++round) {
    const auto count = static_cast<long long>(std::ceil(s_max / h));
    std::vector<double> nodes(static_cast<std::size_t>(count + 1));
    for (long long j = 0; j <= count; ++j) nodes[static_cast<std::size_t>(j)] = static_cast<double>(j) * h;
    ensure(nodes);
    double sum = 0.0;
    for (long long j = 0; j <= count; ++j) {
      const double s = nodes[static_cast<std::size_t>(j)];
      const cplx z{theta_, s};
      const cplx f = spectral_sum(cache_.at(key(s)), t) * kernel(z, s) * std::exp(cplx{0.0, -s * a * t});
      sum += (j == 0 ? 1.0 : 2.0) * f.real();
    }
    const double value = h * sum / (2.0 * kPi);
    res.rounds = round + 1;
    res.step = h;
    res.s_max = static_cast<double>(count) * h;
    res.nodes = nodes.size();
    res.normalized = value;
    if (round > 0) {
      res.last_change = value == 0.0 && previous == 0.0 ? 0.0 : std::abs(value - previous) / std::abs(value);
      if (res.last_change < opts_.rel_tol) break;
    }
    previous = value;
    if (round + 1 == opts_.max_rounds) {
      std::ostringstream os;
      os << "saddle-line inversion did not converge at t = " << t << " after " << res.rounds
         << " rounds (relative change " << res.last_change << ", step " << h << ", s_max " << res.s_max
         << "); inspect the decay profile";
      throw NumericalError(os.str());
    }
    h *= 0.5;
    s_max *= 2.0;
  }
  res.log_value = res.normalized > 0.0 ? std::log(res.normalized) - rate * t : std::nan("");
  res.value = res.normalized > 0.0 ? std::exp(res.log_value) : res.normalized * std::exp(-rate * t);
  return res;
}

InversionResult SaddleLine::integrate_lattice(double a, double t) {
  const double rate = a * theta_ - mu_;
  const double k = std::ceil(a * t - 1e-9);
  const double offset = std::exp(-theta_ * (k - a * t));
  long long n = 16;
  while (static_cast<double>(n) * theta_ < std::max(rate * t, 0.0) + opts_.alias_exponent) n *= 2;

  InversionResult res;
  double previous = 0.0;
  for (int round = 0; round < opts_.max_rounds; ++round) {
    const long long half = n / 2;
    std::vector<double> nodes(static_cast<std::size_t>(half + 1));
    for (long long j = 0; j <= half; ++j) {
      nodes[static_cast<std::size_t>(j)] = 2.0 * kPi * std::ldexp(static_cast<double>(j), -static_cast<int>(std::log2(n)));
    }
    ensure(nodes);
    double sum = 0.0;
    for (long long j = 0; j <= half; ++j) {
      const double s = nodes[static_cast<std::size_t>(j)];
      const cplx z{theta_, s};
      const cplx f = spectral_sum(cache_.at(key(s)), t) * std::exp(cplx{0.0, -s * k}) / (1.0 - std::exp(-z));
      sum += (j == 0 || j == half ? 1.0 : 2.0) * f.real();
    }
    const double value = offset * sum / static_cast<double>(n);
    res.rounds = round + 1;
    res.step = 2.0 * kPi / static_cast<double>(n);
    res.s_max = kPi;
    res.nodes = nodes.size();
    res.normalized = value;
    if (round > 0) {
      res.last_change = value == 0.0 && previous == 0.0 ? 0.0 : std::abs(value - previous) / std::abs(value);
      if (res.last_change < opts_.rel_tol) break;
    }
    previous = value;
    if (round + 1 == opts_.max_rounds) {
      throw NumericalError("lattice inversion did not converge at n = " + std::to_string(t));
    }
    n *= 2;
  }
  res.log_value = res.normalized > 0.0 ? std::log(res.normalized) - rate * t : std::nan("");
  res.value = res.normalized > 0.0 ? std::exp(res.log_value) : res.normalized * std::exp(-rate * t);
  return res;
}

InversionResult SaddleLine::tail(double a, double t) {
  if (!(t > 0.0)) throw PreconditionError("tail probabilities need t > 0");
  family_.check_time(t);
  if (family_.lattice()) return integrate_lattice(a, t);
  if (family_.discrete() && !(family_.noise_var().minCoeff() > 0.0)) {
    throw PreconditionError("chain tails need either integer increments or positive variance in every state");
  }
  return integrate_line([](cplx z, double) { return 1.0 / z; }, theta_, a, t);
}

InversionResult SaddleLine::weak(const TestFunction& f, double a, double t) {
  if (!(t > 0.0)) throw PreconditionError("weak expectations need t > 0");
  family_.check_time(t);
  if (family_.discrete() && !(family_.noise_var().minCoeff() > 0.0)) {
    throw PreconditionError("weak expectations need a non-lattice observable");
  }
  return integrate_line([&f](cplx z, double) { return f.laplace(z); }, f.pole_distance(theta_), a, t);
}

}  // namespace ldpx
