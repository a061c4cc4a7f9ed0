#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldpx/rate.hpp"

namespace ldpx {

/// Dirac start functional and test vector resolved against a tilted family.
struct Observation {
  std::size_t start = 0;
  Eigen::VectorXd v;
};

Observation resolve_observation(const EvaluationFrame& frame, const TiltedFamily& family);

struct MgfOptions {
  /// Largest allowed t Re mu(Re z) before the plain mgf refuses to exponentiate.
  double log_cap = 700.0;
};

/// l(U(z, t) v) = E_{x0}[e^{z S_t} v(X_t)]. Throws RangeError when it would overflow.
cplx mgf(const TiltedFamily& family, const Observation& obs, cplx z, double t, const MgfOptions& opts = {});
/// Complex logarithm of the mgf, computed without overflow.
cplx log_mgf(const TiltedFamily& family, const Observation& obs, cplx z, double t);

/// Smooth test functions of the weak expansion.
class TestFunction {
 public:
  enum class Kind { gaussian_window, one_sided_exponential, compact_bump };

  /// A exp(-x^2 / (2 w^2)).
  static TestFunction gaussian_window(double amplitude, double width);
  /// A e^{-beta x} for x >= 0, zero otherwise.
  static TestFunction one_sided_exponential(double amplitude, double beta);
  /// A exp(-1 / (1 - (x/r)^2)) on |x| < r.
  static TestFunction compact_bump(double amplitude, double radius);

  Kind kind() const { return kind_; }
  std::string name() const;
  double amplitude() const { return amplitude_; }
  double parameter() const { return parameter_; }
  /// Decay order: f e^{alpha |x|} stays bounded. Infinite for the windows.
  double alpha() const;
  /// Smoothness order m; -1 stands for C-infinity.
  int smoothness() const;
  int moment_order() const { return 0; }

  double operator()(double x) const;
  /// Two-sided Laplace transform F(z) = int f(x) e^{-z x} dx.
  cplx laplace(cplx z) const;
  /// Distance from Re z = theta to the nearest singularity of F; infinite if F is entire.
  double pole_distance(double theta) const;

  TestFunction scaled(double factor) const;

 private:
  Kind kind_ = Kind::gaussian_window;
  double amplitude_ = 1.0;
  double parameter_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct InversionOptions {
  double rel_tol = 1e-6;
  int max_rounds = 8;
  /// Target size of the neglected aliasing terms, as a natural-log exponent.
  double alias_exponent = 20.0;
};

struct InversionResult {
  /// e^{I t} times the quantity (tail probability or expectation).
  double normalized = 0.0;
  /// log of the quantity itself (NaN when it is not positive).
  double log_value = 0.0;
  double value = 0.0;
  double step = 0.0;
  double s_max = 0.0;
  int rounds = 0;
  std::size_t nodes = 0;
  double last_change = 0.0;
};

/// Saddle-line inversion along Re z = theta for one family and start/test pair.
///
/// Each quadrature node needs an eigendecomposition of U(theta + i s); nodes are
/// dyadic so they are cached and shared between horizons and refinement rounds.
class SaddleLine {
 public:
  SaddleLine(const TiltedFamily& family, Observation obs, double theta, InversionOptions opts = {});

  double theta() const { return theta_; }
  double mu() const { return mu_; }

  /// P(S_t >= a t) together with its normalized form e^{I(a) t} P.
  InversionResult tail(double a, double t);
  /// e^{I(a) t} E[f(S_t - a t)].
  InversionResult weak(const TestFunction& f, double a, double t);

  std::size_t cached_nodes() const;

 private:
  struct Node {
    Eigen::VectorXcd lambda;
    Eigen::VectorXcd coef;
    bool direct = false;
    cplx z;
  };
  using Kernel = std::function<cplx(cplx z, double s)>;

  InversionResult integrate_line(const Kernel& kernel, double pole_distance, double a, double t);
  InversionResult integrate_lattice(double a, double t);
  void ensure(const std::vector<double>& s_list);
  cplx spectral_sum(const Node& node, double t);
  static long long key(double s);

  const TiltedFamily& family_;
  Observation obs_;
  double theta_;
  double mu_;
  double curvature_;
  InversionOptions opts_;
  std::map<long long, Node> cache_;
};

struct TailPoint {
  double t = 0.0;
  double p = 0.0;
  double log_p = 0.0;
  /// e^{I t} P.
  double normalized = 0.0;
  /// sqrt(t) e^{I t} P.
  double scaled = 0.0;
  InversionResult inversion;
};

struct TailCurve {
  double a = 0.0;
  RatePoint rate;
  std::vector<TailPoint> points;
};

/// P(S_t >= a t). Throws PreconditionError for t <= 0 and NumericalError when refinement stalls.
double exact_tail(const TiltedFamily& family, const Observation& obs, double a, double t,
                  const RateOptions& rate_opts = {}, const InversionOptions& opts = {});
TailCurve tail_curve(const TiltedFamily& family, const Observation& obs, double a,
                     const std::vector<double>& t_list, const RateOptions& rate_opts = {},
                     const InversionOptions& opts = {});

struct LeadingCoefficient {
  double d0 = 0.0;
  RatePoint rate;
  double g_start = 0.0;
  double psi_v = 0.0;
  std::vector<std::string> warnings;
};

/// D_0 = g(x0) <psi, v> sqrt(I''(a)) / (theta_a sqrt(2 pi)).
LeadingCoefficient leading_coefficient(const TiltedFamily& family, const Observation& obs, double a,
                                       const RateOptions& rate_opts = {});

struct CoeffFit {
  double a = 0.0;
  int order = 0;
  std::vector<double> coefficients;
  /// Weighted residual norm relative to the weighted data norm.
  double residual = 0.0;
  /// Condition number of the column-normalized weighted design matrix.
  double condition = 0.0;
  /// Largest relative change of D_0 when one sample is left out.
  double d0_stability = 0.0;
  double d0_analytic = 0.0;
  double d0_rel_error = 0.0;
  bool prefactor_agrees = false;
  TailCurve curve;
};

struct FitOptions {
  double max_condition = 1e8;
  double prefactor_tol = 0.01;
};

/// Least-squares fit of e^{I t} P(S_t >= a t) = sum_k D_k t^{-(k + 1/2)}, k <= r / 2.
CoeffFit extract_coefficients(const TiltedFamily& family, const Observation& obs, double a,
                              const std::vector<double>& t_list, int order, const RateOptions& rate_opts = {},
                              const InversionOptions& inv_opts = {}, const FitOptions& fit_opts = {});
/// Fit on an existing curve (no inversion); used by extract_coefficients and the CLI.
CoeffFit fit_coefficients(const TailCurve& curve, int order, double d0_analytic, const FitOptions& fit_opts = {});

/// e^{I(a) t} E[f(S_t - a t)]. Throws ConditionError unless f's decay order exceeds theta_a.
double weak_expectation(const TiltedFamily& family, const Observation& obs, const TestFunction& f, double a,
                        double t, const RateOptions& rate_opts = {}, const InversionOptions& opts = {});

}  // namespace ldpx
