#pragma once

#include <cstdint>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "ldpx/expansion.hpp"

namespace ldpx {

/// Independent per-path random streams: (seed, path, stream) is hashed into the engine seed,
/// so every path is reproducible on its own, whatever the thread schedule.
class PathRng {
 public:
  enum Stream : std::uint64_t { state_noise = 0, observable_noise = 1, initial_state = 2, bootstrap = 3 };

  PathRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream);
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

 private:
  boost::random::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;  // ziggurat
  boost::random::uniform_01<double> uniform_;
};

std::uint64_t splitmix64(std::uint64_t x);

struct TrajectoryBatch {
  std::size_t n_paths = 0;
  int dim = 1;
  double dt = 0.0;
  double t = 0.0;
  std::uint64_t seed = 0;
  /// Final states, wrapped to [0, 1); `dim` entries per path.
  std::vector<double> x;
  std::vector<double> y;
};

struct SimulationOptions {
  double dt = 1e-3;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  /// Add the Stratonovich-to-Ito correction 1/2 sum (V_i . grad) V_i to the drift.
  bool ito_correction = true;
};

/// Throws PreconditionError unless dt <= 1e-2 and t is a multiple of dt.
TrajectoryBatch euler_maruyama(const TorusDiffusionSpec& spec, const Point& x0, double t,
                               const SimulationOptions& opts);

/// Doob-transformed dynamics at tilt theta.
struct TiltedDynamics {
  double theta = 0.0;
  double mu = 0.0;
  /// Extra drift (V V^T) grad log g_theta added to V_0; Y drift replaced by b + theta sigma^2.
  TorusDiffusionSpec spec;
  /// log g_theta as an interpolated periodic function.
  PeriodicFunction log_g;
};

TiltedDynamics tilted_dynamics(const TorusDiffusionSpec& spec, const TiltedFamily& family, double theta);
TiltedDynamics tilted_dynamics(const TorusDiffusionSpec& spec, double theta, std::size_t grid_n = 256);

struct ISEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  double ess = 0.0;
  double theta = 0.0;
  std::size_t n_paths = 0;
  std::size_t hits = 0;
};

/// Importance-sampled P(Y_t >= a t) under the tilted dynamics at theta_a.
/// Throws NumericalError when the effective sample size drops below 10.
ISEstimate estimate_tail_is(const TorusDiffusionSpec& spec, const EvaluationFrame& frame, double a, double t,
                            const SimulationOptions& opts, std::size_t grid_n = 256,
                            const RateOptions& rate_opts = {});
/// Same estimator with a given tilt; theta = 0 is plain Monte Carlo.
ISEstimate estimate_tail_tilted(const TorusDiffusionSpec& spec, const EvaluationFrame& frame, double a, double t,
                                double theta, const SimulationOptions& opts, std::size_t grid_n = 256);
/// Indicator mean under the original dynamics.
ISEstimate estimate_tail_mc(const TorusDiffusionSpec& spec, const EvaluationFrame& frame, double a, double t,
                            const SimulationOptions& opts, std::size_t grid_n = 256);

Corrector effective_diffusivity(const TorusDiffusionSpec& spec, double theta, std::size_t grid_n = 256);
Corrector effective_diffusivity(const TiltedFamily& family, double theta);

struct DecorrelationRow {
  double t = 0.0;
  /// (1/t) E_pi[(Y~_t - c t) d/dx log g(X~_t)].
  double statistic = 0.0;
  double stderr_ = 0.0;
  double bootstrap_stderr = 0.0;
};

struct DecorrelationReport {
  double theta = 0.0;
  double c_theta = 0.0;
  std::vector<DecorrelationRow> rows;
  /// Smallest C with |statistic| <= C / sqrt(t) on every row.
  double envelope = 0.0;
};

DecorrelationReport decorrelation_check(const TorusDiffusionSpec& spec, double theta,
                                        const std::vector<double>& t_list, const SimulationOptions& opts,
                                        std::size_t grid_n = 256, int bootstrap_rounds = 200);

/// Pairwise sum in a fixed tree order; independent of how the values were produced.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace ldpx
