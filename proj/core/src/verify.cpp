#include "ldpx/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ldpx/errors.hpp"
#include "ldpx/parallel.hpp"

namespace ldpx {

bool Verdict::pass() const {
  if (std::isnan(value)) return false;
  return compare == Compare::above ? value > threshold : value < threshold;
}

bool ConditionReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass(); });
}

bool ConditionReport::passed(const std::string& condition) const {
  bool seen = false;
  for (const auto& v : verdicts) {
    if (v.condition != condition) continue;
    seen = true;
    if (!v.pass()) return false;
  }
  return seen;
}

std::vector<Verdict> ConditionReport::failures() const {
  std::vector<Verdict> out;
  for (const auto& v : verdicts) {
    if (!v.pass()) out.push_back(v);
  }
  return out;
}

B1Surrogate b1_surrogate(const TiltedFamily& family, double theta, const SuiteOptions& opts) {
  const int m = opts.disc_points;
  const int deg = opts.poly_degree;
  if (m <= deg) throw PreconditionError("B1 surrogate needs more disc points than the polynomial degree");
  const double r = opts.disc_radius;
  const double two_pi = 2.0 * std::numbers::pi;

  Eigen::MatrixXcd vander(m, deg + 1);
  Eigen::VectorXcd rhs(m);
  std::vector<cplx> nodes;
  for (int k = 0; k < m; ++k) nodes.push_back(std::polar(1.0, two_pi * k / m));
  // Interior check points, rotated off the fit angles.
  std::vector<cplx> checks;
  for (int k = 0; k < 4; ++k) checks.push_back(std::polar(0.5, two_pi * (k + 0.5) / 4.0 + 0.3));

  std::vector<cplx> all = nodes;
  all.insert(all.end(), checks.begin(), checks.end());
  std::vector<cplx> values(all.size());
  parallel_for(all.size(), [&](std::size_t k) { values[k] = top_exponent(family, theta + r * all[k]); });

  for (int k = 0; k < m; ++k) {
    cplx p = 1.0;
    for (int j = 0; j <= deg; ++j) {
      vander(k, j) = p;
      p *= nodes[static_cast<std::size_t>(k)];
    }
    rhs[k] = values[static_cast<std::size_t>(k)];
  }
  const Eigen::VectorXcd coef = vander.colPivHouseholderQr().solve(rhs);

  const double mu0 = std::abs(cgf(family, theta));
  B1Surrogate out;
  out.degree = deg;
  for (Eigen::Index j = 0; j < coef.size(); ++j) out.coefficients_abs.push_back(std::abs(coef[j]));
  for (std::size_t k = 0; k < checks.size(); ++k) {
    cplx p = 0.0;
    for (int j = deg; j >= 0; --j) p = p * checks[k] + coef[j];
    out.residual = std::max(out.residual, std::abs(p - values[nodes.size() + k]) / std::max(1.0, mu0));
  }
  return out;
}

namespace {

Eigen::VectorXd power_vector(const Eigen::MatrixXd& u) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(u.rows());
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd next = u * x;
    next /= next.cwiseAbs().maxCoeff();
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (change < 1e-15) break;
  }
  return x;
}

double inf_norm(const Eigen::MatrixXd& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

Eigen::MatrixXd semigroup_projector(const TiltedFamily& family, double theta, double mu, double t) {
  const Eigen::MatrixXd u = family.real_propagator(theta, t, mu);
  const Eigen::VectorXd right = power_vector(u);
  const Eigen::VectorXd left = power_vector(u.transpose());
  return right * left.transpose() / left.dot(right);
}

}  // namespace

ProjectorCheck projector_time_independence(const TiltedFamily& family, double theta,
                                           const std::vector<double>& t_list) {
  for (double t : t_list) {
    if (t < 1.0 || t > 2.0) throw PreconditionError("projector times must lie in [1, 2]");
    family.check_time(t);
  }
  const SpectralTriple triple = top_eigen(family, theta);
  const double mu = triple.mu.real();
  const Eigen::MatrixXd reference = semigroup_projector(family, theta, mu, 1.0);
  const Eigen::MatrixXd eigenpair = triple.projector().real();

  ProjectorCheck out;
  out.per_t.resize(t_list.size());
  std::vector<double> dist(t_list.size());
  parallel_for(t_list.size(), [&](std::size_t k) {
    const Eigen::MatrixXd p = t_list[k] == 1.0 ? reference : semigroup_projector(family, theta, mu, t_list[k]);
    out.per_t[k] = inf_norm(p - reference);
    dist[k] = inf_norm(p - eigenpair);
  });
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    out.residual = std::max(out.residual, out.per_t[k]);
    out.eigenpair_distance = std::max(out.eigenpair_distance, dist[k]);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

template <typename Fn>
void guarded(Verdict& v, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    v.value = std::numeric_limits<double>::quiet_NaN();
    v.note = e.what();
  }
}

std::vector<Verdict> check_theta(const TiltedFamily& family, const Observation& obs, double theta,
                                 const std::vector<double>& s_grid, const std::vector<double>& t_grid,
                                 const std::vector<double>& projector_times, const SuiteOptions& opts) {
  using C = Verdict::Compare;
  double scale = 1.0;
  try {
    scale = std::max(1.0, std::abs(cgf(family, theta)));
  } catch (const std::exception&) {
  }

  Verdict b1{"B1", theta, "surrogate_residual", 0.0, opts.b1_tol, C::below, "surrogate, not a proof"};
  guarded(b1, [&] { b1.value = b1_surrogate(family, theta, opts).residual; });

  Verdict b2{"B2", theta, "gap", 0.0, opts.gap_tol * scale, C::above, ""};
  Verdict pos{"D3-positivity", theta, "l(Pi v)", 0.0, 0.0, C::above, ""};
  guarded(b2, [&] {
    SpectralOptions sp = opts.spectral;
    sp.degenerate_tol = 0.0;
    const SpectralTriple triple = top_eigen(family, theta, sp);
    b2.value = triple.gap;
    b2.note = "runner-up " + fmt(triple.runner_up.real());
    pos.value = triple.g[static_cast<Eigen::Index>(obs.start)].real() * triple.psi.real().dot(obs.v);
  });
  if (std::isnan(b2.value)) {
    pos.value = b2.value;
    pos.note = b2.note;
  }

  Verdict b3{"B3", theta, "min_gap_re", 0.0, opts.gap_tol * scale, C::above, ""};
  guarded(b3, [&] {
    const auto samples = check_b3(family, theta, s_grid);
    auto worst = std::min_element(samples.begin(), samples.end(),
                                  [](const GapSample& x, const GapSample& y) { return x.gap_re < y.gap_re; });
    b3.value = worst->gap_re;
    b3.note = "worst s = " + fmt(worst->s);
  });

  Verdict d12{"D1-2", theta, "epsilon", 0.0, 0.0, C::above, ""};
  guarded(d12, [&] {
    const DecayProfile prof = decay_profile(family, theta, s_grid, t_grid);
    d12.value = prof.epsilon;
    d12.note = "K = " + fmt(prof.K) + ", rate = " + fmt(prof.rate);
  });

  Verdict d2{"D2", theta, "projector_residual", 0.0, opts.projector_tol, C::below, ""};
  guarded(d2, [&] {
    const ProjectorCheck pc = projector_time_independence(family, theta, projector_times);
    d2.value = pc.residual;
    d2.note = "distance to g psi^T = " + fmt(pc.eigenpair_distance);
  });

  Verdict conv{"D3-convexity", theta, "mu''", 0.0, 0.0, C::above, ""};
  guarded(conv, [&] {
    const CgfDerivatives d = cgf_derivatives(family, theta, opts.spectral);
    conv.value = d.d2;
    conv.note = "spectral " + fmt(d.d2_spectral);
  });

  return {b1, b2, b3, d12, d2, conv, pos};
}

}  // namespace

ConditionReport run_condition_suite(const TiltedFamily& family, const Observation& obs,
                                    const std::vector<double>& theta_grid, const std::vector<double>& s_grid,
                                    const std::vector<double>& t_grid, const SuiteOptions& opts) {
  ConditionReport report;
  if (theta_grid.empty()) return report;

  std::vector<double> times;
  for (double t : t_grid) {
    if (t < 1.0 || t > 2.0) continue;
    if (family.discrete() && t != std::round(t)) continue;
    times.push_back(t);
  }
  if (times.empty()) times = family.discrete() ? std::vector<double>{1.0, 2.0} : std::vector<double>{1.0, 1.5, 2.0};

  std::vector<std::vector<Verdict>> parts(theta_grid.size());
  parallel_for(theta_grid.size(), [&](std::size_t k) {
    parts[k] = check_theta(family, obs, theta_grid[k], s_grid, t_grid, times, opts);
  });
  for (auto& p : parts) report.verdicts.insert(report.verdicts.end(), p.begin(), p.end());
  return report;
}

double ChainTailOracle::total() const {
  double s = 0.0;
  for (double m : mass) s += m;
  return s;
}

double ChainTailOracle::tail_at(double level) const {
  double sum = 0.0;
  const double sd = std::sqrt(gaussian_var);
  for (std::size_t k = 0; k < mass.size(); ++k) {
    if (mass[k] == 0.0) continue;
    const double value = offset + static_cast<double>(k) * delta;
    if (sd == 0.0) {
      if (value >= level - 1e-9 * std::max(1.0, std::abs(level))) sum += mass[k];
    } else {
      sum += mass[k] * 0.5 * std::erfc((level - value) / (sd * std::numbers::sqrt2));
    }
  }
  return sum;
}

ChainTailOracle chain_tail_oracle(const DiscreteChainSpec& chain, const Observation& obs, std::size_t n_steps) {
  if (n_steps < 1 || n_steps > 60) throw PreconditionError("brute-force oracle needs 1 <= n <= 60");
  const auto ns = chain.transition.rows();
  if (obs.start >= static_cast<std::size_t>(ns) || obs.v.size() != ns) {
    throw PreconditionError("observation does not match the chain");
  }
  const Eigen::VectorXd& var = chain.increment_var;
  if ((var.array() - var[0]).abs().maxCoeff() > 1e-15 * std::max(1.0, std::abs(var[0]))) {
    throw PreconditionError("brute-force oracle needs equal Gaussian variances in every state");
  }

  std::vector<double> values;
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < ns; ++j) {
      if (chain.transition(i, j) > 0.0) values.push_back(chain.transition_increment(i, j) + chain.increment_mean[i]);
    }
  }
  std::sort(values.begin(), values.end());
  const double lo = values.front();
  const double span = values.back() - lo;
  double delta = 1.0;
  if (span > 0.0) {
    delta = span;
    for (std::size_t k = 1; k < values.size(); ++k) {
      const double d = values[k] - values[k - 1];
      if (d > 1e-8 * std::max(1.0, span)) delta = std::min(delta, d);
    }
  }
  for (double v : values) {
    const double q = (v - lo) / delta;
    if (std::abs(q - std::round(q)) > 1e-8 * std::max(1.0, q)) {
      throw PreconditionError("increments do not share a lattice at 1e-8 resolution");
    }
  }

  const auto step_cells = static_cast<std::size_t>(std::llround(span / delta));
  const std::size_t cells = n_steps * step_cells + 1;
  if (cells * static_cast<std::size_t>(ns) > 1000000) {
    throw RangeError("value grid too large for the brute-force oracle (" + std::to_string(cells) + " cells)");
  }

  Eigen::MatrixXi jump(ns, ns);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < ns; ++j) {
      jump(i, j) = static_cast<int>(
          std::llround((chain.transition_increment(i, j) + chain.increment_mean[i] - lo) / delta));
    }
  }

  // dist(state, cell); cell k after s steps stands for s * lo + k * delta.
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(ns, static_cast<Eigen::Index>(cells));
  dist(static_cast<Eigen::Index>(obs.start), 0) = 1.0;
  for (std::size_t step = 0; step < n_steps; ++step) {
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(ns, static_cast<Eigen::Index>(cells));
    const auto used = static_cast<Eigen::Index>(step * step_cells + 1);
    for (Eigen::Index i = 0; i < ns; ++i) {
      for (Eigen::Index j = 0; j < ns; ++j) {
        const double p = chain.transition(i, j);
        if (p == 0.0) continue;
        next.row(j).segment(jump(i, j), used) += p * dist.row(i).head(used);
      }
    }
    dist = std::move(next);
  }

  ChainTailOracle out;
  out.n_steps = n_steps;
  out.delta = delta;
  out.offset = static_cast<double>(n_steps) * lo;
  out.gaussian_var = static_cast<double>(n_steps) * var[0];
  const Eigen::VectorXd weighted = dist.transpose() * obs.v;
  out.mass.assign(weighted.data(), weighted.data() + weighted.size());
  if ((obs.v.array() == 1.0).all() && std::abs(out.total() - 1.0) > 1e-12) {
    throw NumericalError("brute-force distribution does not sum to one");
  }
  return out;
}

double brute_force_chain_tail(const DiscreteChainSpec& chain, const Observation& obs, std::size_t n_steps,
                              double a) {
  return chain_tail_oracle(chain, obs, n_steps).tail(a);
}

}  // namespace ldpx
