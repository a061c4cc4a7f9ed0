#include "ldpx/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>

#include "ldpx/errors.hpp"

namespace ldpx {

double exact_tail(const TiltedFamily& family, const Observation& obs, double a, double t,
                  const RateOptions& rate_opts, const InversionOptions& opts) {
  if (!(t > 0.0)) throw PreconditionError("exact_tail needs t > 0");
  const RatePoint rate = rate_point(family, a, rate_opts);
  SaddleLine line(family, obs, rate.theta_a, opts);
  return line.tail(a, t).value;
}

TailCurve tail_curve(const TiltedFamily& family, const Observation& obs, double a,
                     const std::vector<double>& t_list, const RateOptions& rate_opts,
                     const InversionOptions& opts) {
  for (double t : t_list) {
    if (!(t > 0.0)) throw PreconditionError("tail curves need t > 0");
  }
  TailCurve curve;
  curve.a = a;
  curve.rate = rate_point(family, a, rate_opts);
  SaddleLine line(family, obs, curve.rate.theta_a, opts);
  for (double t : t_list) {
    TailPoint p;
    p.t = t;
    p.inversion = line.tail(a, t);
    p.p = p.inversion.value;
    p.log_p = p.inversion.log_value;
    // The line normalizes with its own mu(theta_a); re-express with the rate point's I.
    p.normalized = std::exp(p.log_p + curve.rate.I * t);
    p.scaled = std::sqrt(t) * p.normalized;
    curve.points.push_back(p);
  }
  return curve;
}

LeadingCoefficient leading_coefficient(const TiltedFamily& family, const Observation& obs, double a,
                                       const RateOptions& rate_opts) {
  if (family.lattice()) {
    throw PreconditionError("the leading coefficient formula needs a non-lattice observable");
  }
  LeadingCoefficient out;
  out.rate = rate_point(family, a, rate_opts);
  if (!(out.rate.theta_a > 0.0)) throw RangeError("leading coefficient needs theta_a > 0");
  const SpectralTriple triple = top_eigen(family, out.rate.theta_a, rate_opts.spectral);
  const Eigen::VectorXd g = triple.g_real();
  const Eigen::VectorXd psi = triple.psi_real();
  out.g_start = g[static_cast<Eigen::Index>(obs.start)];
  out.psi_v = psi.dot(obs.v);
  out.d0 = out.g_start * out.psi_v * std::sqrt(out.rate.Isecond) /
           (out.rate.theta_a * std::sqrt(2.0 * std::numbers::pi));
  if (out.rate.theta_a < 1e-2) {
    out.warnings.push_back("theta_a is close to zero: D_0 diverges as a approaches the mean slope");
  }
  const Eigen::VectorXd pn = psi / psi.sum();
  const Eigen::VectorXd gn = g / g.sum();
  if ((pn - gn).cwiseAbs().maxCoeff() > 1e-8 * gn.cwiseAbs().maxCoeff()) {
    out.warnings.push_back("psi is not proportional to g; the g(x0) * sum(g) shortcut does not apply");
  }
  return out;
}

namespace {

struct LsqResult {
  Eigen::VectorXd coef;
  double condition = 0.0;
  double residual = 0.0;
};

LsqResult weighted_lsq(const std::vector<double>& t, const std::vector<double>& y, int order, int terms) {
  const auto m = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXd x(m, terms);
  Eigen::VectorXd rhs(m);
  const double wexp = 0.5 * (order + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ti = t[static_cast<std::size_t>(i)];
    const double w = std::pow(ti, wexp);
    for (int k = 0; k < terms; ++k) x(i, k) = w * std::pow(ti, -(k + 0.5));
    rhs[i] = w * y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd scale = x.colwise().norm().transpose();
  const Eigen::MatrixXd xn = x * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xn, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  LsqResult r;
  r.condition = sv[0] / sv[sv.size() - 1];
  r.coef = svd.solve(rhs).cwiseQuotient(scale);
  r.residual = (x * r.coef - rhs).norm() / rhs.norm();
  return r;
}

}  // namespace

CoeffFit fit_coefficients(const TailCurve& curve, int order, double d0_analytic, const FitOptions& fit_opts) {
  if (order < 0) throw PreconditionError("fit order must be nonnegative");
  const int terms = order / 2 + 1;
  const std::size_t need = static_cast<std::size_t>(order / 2 + 3);
  if (curve.points.size() < need) {
    throw PreconditionError("order " + std::to_string(order) + " needs at least " + std::to_string(need) +
                            " horizons");
  }
  std::vector<double> t, y;
  for (const auto& p : curve.points) {
    t.push_back(p.t);
    y.push_back(p.normalized);
  }
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  if (*tmax < 8.0 * *tmin) throw PreconditionError("horizons must span at least a factor of 8");

  const LsqResult full = weighted_lsq(t, y, order, terms);
  if (!(full.condition <= fit_opts.max_condition)) {
    std::ostringstream os;
    os << "ill-conditioned fit (condition " << full.condition << "); widen the t span or lower the order";
    throw NumericalError(os.str());
  }
  CoeffFit fit;
  fit.a = curve.a;
  fit.order = order;
  fit.coefficients.assign(full.coef.data(), full.coef.data() + full.coef.size());
  fit.residual = full.residual;
  fit.condition = full.condition;
  const double d0 = fit.coefficients.front();
  if (t.size() > static_cast<std::size_t>(terms) + 1) {
    for (std::size_t drop = 0; drop < t.size(); ++drop) {
      std::vector<double> ts, ys;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i == drop) continue;
        ts.push_back(t[i]);
        ys.push_back(y[i]);
      }
      const LsqResult loo = weighted_lsq(ts, ys, order, terms);
      fit.d0_stability = std::max(fit.d0_stability, std::abs(loo.coef[0] - d0) / std::abs(d0));
    }
  }
  fit.d0_analytic = d0_analytic;
  fit.d0_rel_error = std::abs(d0 - d0_analytic) / std::abs(d0_analytic);
  fit.prefactor_agrees = fit.d0_rel_error < fit_opts.prefactor_tol;
  fit.curve = curve;
  return fit;
}

CoeffFit extract_coefficients(const TiltedFamily& family, const Observation& obs, double a,
                              const std::vector<double>& t_list, int order, const RateOptions& rate_opts,
                              const InversionOptions& inv_opts, const FitOptions& fit_opts) {
  if (order < 0) throw PreconditionError("fit order must be nonnegative");
  if (t_list.size() < static_cast<std::size_t>(order / 2 + 3)) {
    throw PreconditionError("not enough horizons for order " + std::to_string(order));
  }
  const LeadingCoefficient lead = leading_coefficient(family, obs, a, rate_opts);
  const TailCurve curve = tail_curve(family, obs, a, t_list, rate_opts, inv_opts);
  return fit_coefficients(curve, order, lead.d0, fit_opts);
}

double weak_expectation(const TiltedFamily& family, const Observation& obs, const TestFunction& f, double a,
                        double t, const RateOptions& rate_opts, const InversionOptions& opts) {
  if (!(t > 0.0)) throw PreconditionError("weak_expectation needs t > 0");
  if (family.lattice()) throw PreconditionError("weak expectations need a non-lattice observable");
  const RatePoint rate = rate_point(family, a, rate_opts);
  if (!(f.alpha() > rate.theta_a)) {
    std::ostringstream os;
    os << "test function " << f.name() << " has decay order " << f.alpha() << " <= theta_a = " << rate.theta_a
       << "; it is not admissible at this level";
    throw ConditionError(os.str());
  }
  if (f.amplitude() == 0.0) return 0.0;
  SaddleLine line(family, obs, rate.theta_a, opts);
  const InversionResult r = line.weak(f, a, t);
  // Re-express with the rate point's I (equal to a theta_a - mu up to round-off).
  return r.normalized * std::exp((rate.I - (a * rate.theta_a - line.mu())) * t);
}

}  // namespace ldpx
