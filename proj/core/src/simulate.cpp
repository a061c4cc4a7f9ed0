#include "ldpx/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldpx/errors.hpp"
#include "ldpx/parallel.hpp"

namespace ldpx {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t path, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(splitmix64(seed) ^ path) ^ (stream * 0x632be59bd9b4e019ULL))) {}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

namespace {

// Scalar field on the torus sampled once and evaluated by periodic cubic convolution.
class Field {
 public:
  Field() = default;
  Field(const PeriodicFunction& f, int dim, std::size_t m) : dim_(dim) {
    if (f.is_constant()) {
      constant_ = true;
      value_ = f.mean_part();
      return;
    }
    constant_ = false;
    table_ = PeriodicTable{dim, m, f.sample(dim, m)};
    md_ = static_cast<double>(m);
  }

  bool constant() const { return constant_; }
  double value() const { return value_; }

  double operator()(const double* x) const {
    if (constant_) return value_;
    if (dim_ == 2) return interpolate(table_, {x[0], x[1]});
    const std::size_t m = table_.m;
    double u = x[0] * md_;
    const double base = std::floor(u);
    const double f = u - base;
    auto i = static_cast<long long>(base) % static_cast<long long>(m);
    if (i < 0) i += static_cast<long long>(m);
    const auto idx = static_cast<std::size_t>(i);
    const double* v = table_.values.data();
    const double p0 = v[(idx + m - 1) % m], p1 = v[idx], p2 = v[(idx + 1) % m], p3 = v[(idx + 2) % m];
    const double f2 = f * f, f3 = f2 * f;
    return 0.5 * ((-f3 + 2.0 * f2 - f) * p0 + (3.0 * f3 - 5.0 * f2 + 2.0) * p1 + (-3.0 * f3 + 4.0 * f2 + f) * p2 +
                  (f3 - f2) * p3);
  }

 private:
  int dim_ = 1;
  bool constant_ = true;
  double value_ = 0.0;
  double md_ = 0.0;
  PeriodicTable table_;
};

// Pointwise functions (drift components) tabulated from a callback.
PeriodicFunction tabulate(int dim, std::size_t m, const std::function<double(const Point&)>& f) {
  PeriodicTable t{dim, m, {}};
  const double h = 1.0 / static_cast<double>(m);
  const std::size_t count = dim == 1 ? m : m * m;
  t.values.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    t.values[k] = f({static_cast<double>(k % m) * h, static_cast<double>(k / m) * h});
  }
  return PeriodicFunction::table(std::move(t));
}

// Channels sampled on one padded 1D lattice so a step computes its cubic weights once.
// Row r holds node (r - 1) mod m, so the four taps of any cell are contiguous. Constant
// channels are not tabulated; they are written once into the output buffer by `fill`.
class Lanes {
 public:
  Lanes() = default;
  Lanes(const std::vector<const PeriodicFunction*>& fns, std::size_t m) : m_(m) {
    for (std::size_t c = 0; c < fns.size(); ++c) {
      if (fns[c]->is_constant()) {
        constants_.emplace_back(c, fns[c]->mean_part());
      } else {
        slots_.push_back(c);
      }
    }
    width_ = slots_.size();
    rows_.resize((m + 3) * width_);
    const double h = 1.0 / static_cast<double>(m);
    for (std::size_t r = 0; r < m + 3; ++r) {
      const std::size_t node = (r + m - 1) % m;
      for (std::size_t c = 0; c < width_; ++c) {
        rows_[r * width_ + c] = (*fns[slots_[c]])(static_cast<double>(node) * h);
      }
    }
  }

  void fill(double* out) const {
    for (const auto& [c, v] : constants_) out[c] = v;
  }

  // Overwrites the tabulated channels of out at x in [0, 1).
  void eval(double x, double* out) const {
    if (width_ == 0) return;
    // x is in [0, 1), so truncation is the floor.
    const double u = x * static_cast<double>(m_);
    const auto cell = static_cast<std::size_t>(u);
    const double f = u - static_cast<double>(cell);
    const std::size_t i = cell & (m_ - 1);
    const double f2 = f * f, f3 = f2 * f;
    const double w0 = 0.5 * (-f3 + 2.0 * f2 - f);
    const double w1 = 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0);
    const double w2 = 0.5 * (-3.0 * f3 + 4.0 * f2 + f);
    const double w3 = 0.5 * (f3 - f2);
    const double* p = rows_.data() + i * width_;
    const std::size_t w = width_;
    for (std::size_t c = 0; c < w; ++c) {
      out[slots_[c]] = w0 * p[c] + w1 * p[w + c] + w2 * p[2 * w + c] + w3 * p[3 * w + c];
    }
  }

 private:
  std::size_t m_ = 0;
  std::size_t width_ = 0;
  std::vector<std::size_t> slots_;
  std::vector<std::pair<std::size_t, double>> constants_;
  std::vector<double> rows_;
};

struct Stepper {
  int dim = 1;
  std::vector<std::array<Field, 2>> v;
  std::array<Field, 2> drift;
  Field b;
  Field sigma;
  bool fields_constant = false;
  // 1D fast path: lanes are drift, b, sigma, V_1..V_k.
  Lanes lanes;
  std::vector<PeriodicFunction> owned;

  Stepper(const TorusDiffusionSpec& spec, bool ito) : dim(spec.dim) {
    const std::size_t m = dim == 1 ? 4096 : 256;
    fields_constant = spec.drift[0].is_constant() && (dim == 1 || spec.drift[1].is_constant()) &&
                      spec.constant_diffusion();
    for (const auto& vf : spec.diffusion) v.push_back({Field(vf[0], dim, m), Field(vf[1], dim, m)});
    owned.reserve(static_cast<std::size_t>(dim));
    for (int c = 0; c < dim; ++c) {
      const bool plain = !ito || spec.constant_diffusion();
      if (plain) {
        owned.push_back(spec.drift[static_cast<std::size_t>(c)]);
      } else {
        owned.push_back(tabulate(dim, m, [&](const Point& x) { return spec.ito_drift(x)[static_cast<std::size_t>(c)]; }));
      }
      drift[static_cast<std::size_t>(c)] = Field(owned.back(), dim, m);
    }
    b = Field(spec.obs_drift, dim, m);
    sigma = Field(spec.obs_noise, dim, m);
    if (dim == 1) {
      std::vector<const PeriodicFunction*> fns{&owned[0], &spec.obs_drift, &spec.obs_noise};
      for (const auto& vf : spec.diffusion) fns.push_back(&vf[0]);
      lanes = Lanes(fns, m);
    }
  }

  bool exact_x() const { return fields_constant && b.constant() && sigma.constant(); }

  // Advances (x, y) by `steps` Euler-Maruyama steps of size dt.
  void advance(double* x, double& y, long long steps, double dt, PathRng& wx, PathRng& wy) const {
    const double sq = std::sqrt(dt);
    const double span = static_cast<double>(steps) * dt;
    if (exact_x()) {
      // Constant coefficients: the Euler sum has exactly this Gaussian law.
      for (int c = 0; c < dim; ++c) x[c] += drift[static_cast<std::size_t>(c)].value() * span;
      const double root = std::sqrt(span);
      for (const auto& vf : v) {
        const double z = wx.normal() * root;
        x[0] += vf[0].value() * z;
        if (dim == 2) x[1] += vf[1].value() * z;
      }
      for (int c = 0; c < dim; ++c) x[c] -= std::floor(x[c]);
      y += b.value() * span + sigma.value() * root * wy.normal();
      return;
    }
    double integral = 0.0;
    if (dim == 1) {
      const std::size_t k = v.size();
      const bool noisy_y = !sigma.constant();
      double vals[16];
      std::vector<double> spill(k > 13 ? 3 + k : 0);
      double* out = k > 13 ? spill.data() : vals;
      lanes.fill(out);
      double x0 = x[0];
      for (long long s = 0; s < steps; ++s) {
        lanes.eval(x0, out);
        integral += out[1];
        if (noisy_y) y += out[2] * sq * wy.normal();
        double dx = out[0] * dt;
        for (std::size_t i = 0; i < k; ++i) dx += out[3 + i] * sq * wx.normal();
        x0 += dx;
        if (x0 < 0.0 || x0 >= 1.0) x0 -= std::floor(x0);
      }
      x[0] = x0;
    } else {
      for (long long s = 0; s < steps; ++s) {
        integral += b(x);
        if (!sigma.constant()) y += sigma(x) * sq * wy.normal();
        double dx0 = drift[0](x) * dt;
        double dx1 = drift[1](x) * dt;
        for (const auto& vf : v) {
          const double z = wx.normal() * sq;
          dx0 += vf[0](x) * z;
          dx1 += vf[1](x) * z;
        }
        x[0] += dx0;
        x[0] -= std::floor(x[0]);
        x[1] += dx1;
        x[1] -= std::floor(x[1]);
      }
    }
    y += integral * dt;
    if (sigma.constant()) y += sigma.value() * std::sqrt(span) * wy.normal();
  }
};

long long step_count(double t, double dt) {
  if (!(dt > 0.0) || dt > 1e-2) throw PreconditionError("dt must be in (0, 1e-2]");
  if (!(t >= 0.0)) throw PreconditionError("horizon must be nonnegative");
  const double ratio = t / dt;
  const auto steps = static_cast<long long>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw PreconditionError("t must be a multiple of dt");
  }
  return steps;
}

Point start_point(const EvaluationFrame& frame, const PeriodicGrid& grid) {
  return grid.point(frame.resolve_start(grid));
}

struct Moments {
  double mean = 0.0;
  double stderr_ = 0.0;
  double ess = 0.0;
};

Moments moments(const std::vector<double>& w) {
  Moments m;
  const std::size_t n = w.size();
  if (n == 0) return m;
  const double sum = pairwise_sum(w.data(), n);
  m.mean = sum / static_cast<double>(n);
  std::vector<double> dev(n), sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    dev[i] = (w[i] - m.mean) * (w[i] - m.mean);
    sq[i] = w[i] * w[i];
  }
  const double var = n > 1 ? pairwise_sum(dev.data(), n) / static_cast<double>(n - 1) : 0.0;
  m.stderr_ = std::sqrt(var / static_cast<double>(n));
  const double sum_sq = pairwise_sum(sq.data(), n);
  m.ess = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  return m;
}

}  // namespace

TrajectoryBatch euler_maruyama(const TorusDiffusionSpec& spec, const Point& x0, double t,
                               const SimulationOptions& opts) {
  const long long steps = step_count(t, opts.dt);
  const Stepper stepper(spec, opts.ito_correction);
  TrajectoryBatch batch;
  batch.n_paths = opts.n_paths;
  batch.dim = spec.dim;
  batch.dt = opts.dt;
  batch.t = t;
  batch.seed = opts.seed;
  batch.x.assign(opts.n_paths * static_cast<std::size_t>(spec.dim), 0.0);
  batch.y.assign(opts.n_paths, 0.0);
  parallel_for(opts.n_paths, [&](std::size_t p) {
    PathRng wx(opts.seed, p, PathRng::state_noise);
    PathRng wy(opts.seed, p, PathRng::observable_noise);
    double x[2] = {x0[0] - std::floor(x0[0]), x0[1] - std::floor(x0[1])};
    double y = 0.0;
    stepper.advance(x, y, steps, opts.dt, wx, wy);
    for (int c = 0; c < spec.dim; ++c) batch.x[p * static_cast<std::size_t>(spec.dim) + static_cast<std::size_t>(c)] = x[c];
    batch.y[p] = y;
  });
  return batch;
}

TiltedDynamics tilted_dynamics(const TorusDiffusionSpec& spec, const TiltedFamily& family, double theta) {
  const auto& grid = family.grid();
  if (!grid) throw PreconditionError("tilted dynamics need a torus diffusion");
  const SpectralTriple triple = top_eigen(family, theta);
  const Eigen::VectorXd g = triple.g_real();
  if (!(g.minCoeff() > 0.0)) throw NumericalError("g_theta is not positive; spectral solve failed upstream");
  TiltedDynamics out;
  out.theta = theta;
  out.mu = triple.mu.real();
  out.spec = spec;
  // b + theta sigma^2 as a table unless sigma is constant.
  if (spec.obs_noise.is_constant()) {
    const double s = spec.obs_noise.mean_part();
    out.spec.obs_drift = spec.obs_drift.shifted(theta * s * s);
  } else {
    const auto sig = spec.obs_noise;
    out.spec.obs_drift = spec.obs_drift.plus(tabulate(spec.dim, grid->n(), [&](const Point& x) {
      const double v = sig(x);
      return theta * v * v;
    }));
  }

  const Eigen::VectorXd lg = g.array().log();
  const std::size_t n = grid->n();
  // Round-off level variation in g would only add a ~1e-12 drift and cost the constant-field shortcut.
  const bool flat = (lg.array() - lg[0]).abs().maxCoeff() < 1e-12;
  out.log_g = PeriodicFunction::constant(0.0);
  if (flat) return out;

  out.log_g = PeriodicFunction::table(PeriodicTable{grid->dim(), n, std::vector<double>(lg.data(), lg.data() + lg.size())});
  const double h = grid->spacing();
  std::array<std::vector<double>, 2> extra;
  for (int c = 0; c < grid->dim(); ++c) extra[static_cast<std::size_t>(c)].resize(grid->size());
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const auto i = static_cast<long long>(k % n);
    const auto j = static_cast<long long>(k / n);
    const Point x = grid->point(k);
    const auto d = spec.diffusion_matrix(x);
    const double gx = (lg[static_cast<Eigen::Index>(grid->index(i + 1, j))] - lg[static_cast<Eigen::Index>(grid->index(i - 1, j))]) / (2.0 * h);
    double gy = 0.0;
    if (grid->dim() == 2) {
      gy = (lg[static_cast<Eigen::Index>(grid->index(i, j + 1))] - lg[static_cast<Eigen::Index>(grid->index(i, j - 1))]) / (2.0 * h);
    }
    extra[0][k] = d[0] * gx + d[1] * gy;
    if (grid->dim() == 2) extra[1][k] = d[2] * gx + d[3] * gy;
  }
  for (int c = 0; c < grid->dim(); ++c) {
    auto& slot = out.spec.drift[static_cast<std::size_t>(c)];
    slot = slot.plus(PeriodicFunction::table(PeriodicTable{grid->dim(), n, std::move(extra[static_cast<std::size_t>(c)])}));
  }
  return out;
}

TiltedDynamics tilted_dynamics(const TorusDiffusionSpec& spec, double theta, std::size_t grid_n) {
  const TiltedFamily family = TiltedFamily::diffusion(spec, PeriodicGrid(spec.dim, grid_n));
  return tilted_dynamics(spec, family, theta);
}

ISEstimate estimate_tail_tilted(const TorusDiffusionSpec& spec, const EvaluationFrame& frame, double a, double t,
                                double theta, const SimulationOptions& opts, std::size_t grid_n) {
  if (!frame.test_vector.is_ones()) throw PreconditionError("tail simulation needs the all-ones test vector");
  const PeriodicGrid grid(spec.dim, grid_n);
  const Point x0 = start_point(frame, grid);
  const long long steps = step_count(t, opts.dt);

  TorusDiffusionSpec dyn_spec = spec;
  PeriodicFunction log_g = PeriodicFunction::constant(0.0);
  double mu = 0.0;
  if (theta != 0.0) {
    const TiltedFamily family = TiltedFamily::diffusion(spec, grid);
    TiltedDynamics dyn = tilted_dynamics(spec, family, theta);
    dyn_spec = std::move(dyn.spec);
    log_g = std::move(dyn.log_g);
    mu = dyn.mu;
  }
  const Stepper stepper(dyn_spec, opts.ito_correction);
  const double lg0 = log_g(x0);
  const double level = a * t;

  std::vector<double> w(opts.n_paths, 0.0);
  parallel_for(opts.n_paths, [&](std::size_t p) {
    PathRng wx(opts.seed, p, PathRng::state_noise);
    PathRng wy(opts.seed, p, PathRng::observable_noise);
    double x[2] = {x0[0], x0[1]};
    double y = 0.0;
    stepper.advance(x, y, steps, opts.dt, wx, wy);
    if (y < level) return;
    w[p] = theta == 0.0 ? 1.0 : std::exp(-theta * y + t * mu + lg0 - log_g({x[0], x[1]}));
  });

  ISEstimate est;
  const Moments m = moments(w);
  est.p_hat = m.mean;
  est.stderr_ = m.stderr_;
  est.ess = m.ess;
  est.theta = theta;
  est.n_paths = opts.n_paths;
  est.hits = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v > 0.0; }));
  return est;
}

ISEstimate estimate_tail_is(const TorusDiffusionSpec& spec, const EvaluationFrame& frame, double a, double t,
                            const SimulationOptions& opts, std::size_t grid_n, const RateOptions& rate_opts) {
  const TiltedFamily family = TiltedFamily::diffusion(spec, PeriodicGrid(spec.dim, grid_n));
  const double theta = solve_theta(family, a, rate_opts);
  ISEstimate est = estimate_tail_tilted(spec, frame, a, t, theta, opts, grid_n);
  if (est.ess < 10.0) {
    throw NumericalError("importance sampling collapsed (ess = " + std::to_string(est.ess) +
                         "); use a shorter horizon or a different tilt");
  }
  return est;
}

ISEstimate estimate_tail_mc(const TorusDiffusionSpec& spec, const EvaluationFrame& frame, double a, double t,
                            const SimulationOptions& opts, std::size_t grid_n) {
  return estimate_tail_tilted(spec, frame, a, t, 0.0, opts, grid_n);
}

Corrector effective_diffusivity(const TiltedFamily& family, double theta) {
  const SpectralTriple triple = top_eigen(family, theta);
  Corrector c = solve_corrector(family, triple);
  if (std::abs(c.solvability) > 1e-10 * std::max(1.0, std::abs(c.c_theta))) {
    throw NumericalError("Poisson problem is not solvable (mean " + std::to_string(c.solvability) + ")");
  }
  return c;
}

Corrector effective_diffusivity(const TorusDiffusionSpec& spec, double theta, std::size_t grid_n) {
  return effective_diffusivity(TiltedFamily::diffusion(spec, PeriodicGrid(spec.dim, grid_n)), theta);
}

DecorrelationReport decorrelation_check(const TorusDiffusionSpec& spec, double theta,
                                        const std::vector<double>& t_list, const SimulationOptions& opts,
                                        std::size_t grid_n, int bootstrap_rounds) {
  DecorrelationReport report;
  report.theta = theta;
  if (t_list.empty()) return report;
  const PeriodicGrid grid(spec.dim, grid_n);
  const TiltedFamily family = TiltedFamily::diffusion(spec, grid);
  const SpectralTriple triple = top_eigen(family, theta);
  const Corrector corr = solve_corrector(family, triple);
  report.c_theta = corr.c_theta;
  const TiltedDynamics dyn = tilted_dynamics(spec, family, theta);
  const Stepper stepper(dyn.spec, opts.ito_correction);

  std::vector<double> times = t_list;
  std::sort(times.begin(), times.end());
  std::vector<long long> marks;
  for (double t : times) marks.push_back(step_count(t, opts.dt));

  const Eigen::VectorXd pi = triple.tilted_stationary() / triple.tilted_stationary().sum();
  std::vector<double> cdf(static_cast<std::size_t>(pi.size()));
  std::partial_sum(pi.data(), pi.data() + pi.size(), cdf.begin());
  const double h = grid.spacing();

  std::vector<std::vector<double>> values(times.size(), std::vector<double>(opts.n_paths, 0.0));
  parallel_for(opts.n_paths, [&](std::size_t p) {
    PathRng init(opts.seed, p, PathRng::initial_state);
    PathRng wx(opts.seed, p, PathRng::state_noise);
    PathRng wy(opts.seed, p, PathRng::observable_noise);
    const double u = init.uniform() * cdf.back();
    const auto cell = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    const Point node = grid.point(cell);
    double x[2] = {node[0] + (init.uniform() - 0.5) * h, spec.dim == 2 ? node[1] + (init.uniform() - 0.5) * h : 0.0};
    x[0] -= std::floor(x[0]);
    x[1] -= std::floor(x[1]);
    double y = 0.0;
    long long done = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      stepper.advance(x, y, marks[k] - done, opts.dt, wx, wy);
      done = marks[k];
      const double slope = dyn.log_g.gradient({x[0], x[1]})[0];
      values[k][p] = (y - corr.c_theta * times[k]) * slope;
    }
  });

  for (std::size_t k = 0; k < times.size(); ++k) {
    DecorrelationRow row;
    row.t = times[k];
    const Moments m = moments(values[k]);
    row.statistic = times[k] > 0.0 ? m.mean / times[k] : 0.0;
    row.stderr_ = times[k] > 0.0 ? m.stderr_ / times[k] : 0.0;
    if (bootstrap_rounds > 1 && times[k] > 0.0) {
      PathRng rng(opts.seed, k, PathRng::bootstrap);
      std::vector<double> means(static_cast<std::size_t>(bootstrap_rounds));
      std::vector<double> sample(opts.n_paths);
      for (auto& mean : means) {
        for (std::size_t i = 0; i < opts.n_paths; ++i) {
          const auto pick = std::min(opts.n_paths - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(opts.n_paths)));
          sample[i] = values[k][pick];
        }
        mean = pairwise_sum(sample.data(), sample.size()) / static_cast<double>(opts.n_paths) / times[k];
      }
      const double avg = pairwise_sum(means.data(), means.size()) / static_cast<double>(means.size());
      double var = 0.0;
      for (double v : means) var += (v - avg) * (v - avg);
      row.bootstrap_stderr = std::sqrt(var / static_cast<double>(means.size() - 1));
    }
    report.envelope = std::max(report.envelope, std::abs(row.statistic) * std::sqrt(row.t));
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ldpx
