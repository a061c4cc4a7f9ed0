// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "golden.hpp"
#include "ldpx/parallel.hpp"
#include "ldpx/presets.hpp"
#include "ldpx/simulate.hpp"
#include "ldpx/verify.hpp"

using namespace ldpx;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string num(double v, int prec = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

struct Model {
  ModelConfig config;
  TiltedFamily family;
  Observation obs;
};

Model load(ModelConfig c, std::size_t n) {
  TiltedFamily f = TiltedFamily::from_model(c.spec, n);
  Observation o = resolve_observation(c.frame, f);
  return {std::move(c), std::move(f), std::move(o)};
}

const TorusDiffusionSpec& torus(const Model& m) { return std::get<TorusDiffusionSpec>(m.config.spec); }

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> t;
  for (int k = 0; k < n; ++k) t.push_back(lo * std::pow(hi / lo, double(k) / (n - 1)));
  return t;
}

const std::vector<double> kSGrid{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0};

// Gaussian baseline: mu(theta) = theta^2 / 2 holds exactly on any grid, so n = 64 suffices.
constexpr std::size_t kGaussianN = 64;
constexpr std::size_t kMathieuN = 256;

Outcome criterion1() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const Model g = load(presets::gaussian_baseline(kGaussianN), kGaussianN);
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0}) {
    const auto p = rate_point(g.family, a);
    worst = std::max({worst, std::abs(p.theta_a - a), std::abs(p.I - 0.5 * a * a)});
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.check(worst < 1e-8, "max |theta_a - a|, |I - a^2/2| = " + num(worst, 3));
  o.check(secs < 1.0, "runtime " + num(secs, 3) + " s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const Model g = load(presets::gaussian_baseline(kGaussianN), kGaussianN);
  const auto lc = leading_coefficient(g.family, g.obs, 1.0);
  o.check(std::abs(lc.d0 - golden::gaussian_D[0]) < 1e-6, "D0 analytic " + num(lc.d0, 12));
  const auto fit = extract_coefficients(g.family, g.obs, 1.0, geometric(16.0, 256.0, 9), 6);
  const auto rel = [&](int k) { return std::abs(fit.coefficients[k] / golden::gaussian_D[k] - 1.0); };
  o.check(rel(0) < 0.01, "D0 fit " + num(fit.coefficients[0]) + " (rel " + num(rel(0), 2) + ")");
  o.check(rel(1) < 0.02, "D1 fit " + num(fit.coefficients[1]) + " (rel " + num(rel(1), 2) + ")");
  o.check(rel(2) < 0.10, "D2 fit " + num(fit.coefficients[2]) + " (rel " + num(rel(2), 2) + ")");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.check(secs < 30.0, "runtime " + num(secs, 3) + " s");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const Model c = load(presets::two_state_pm1(), 0);
  const auto& chain = std::get<DiscreteChainSpec>(c.config.spec);
  double worst = 0.0;
  for (std::size_t n : {10u, 20u, 40u}) {
    for (double a : {0.2, 0.6}) {
      const double brute = brute_force_chain_tail(chain, c.obs, n, a);
      const double exact = exact_tail(c.family, c.obs, a, double(n));
      worst = std::max(worst, std::abs(exact / brute - 1.0));
    }
  }
  o.check(worst < 1e-6, "max rel diff " + num(worst, 3));
  const double p10 = exact_tail(c.family, c.obs, 0.6, 10.0);
  o.check(std::abs(p10 - 0.0546875) < 1e-6 * 0.0546875, "n=10 a=0.6 -> " + num(p10, 10));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.check(secs < 10.0, "runtime " + num(secs, 3) + " s");
  return o;
}

Outcome criterion4(const Model& m) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double th : {0.0, 0.5, 1.0}) {
    const double fd = cgf_d2_fd(m.family, th);
    const double xi = effective_diffusivity(m.family, th).xi;
    worst = std::max(worst, std::abs(fd / xi - 1.0));
  }
  o.check(worst < 0.005, "max |mu''_fd / Xi - 1| = " + num(worst, 3));
  // Plateau: fit the expansion on t in [50, 400] and compare its t -> infinity limit with D0.
  const auto fit = extract_coefficients(m.family, m.obs, golden::mathieu_a, {50, 70, 100, 140, 200, 280, 400}, 6);
  const double d0_rel = std::abs(fit.coefficients[0] / fit.d0_analytic - 1.0);
  o.check(d0_rel < 0.01, "plateau " + num(fit.coefficients[0]) + " vs D0 " + num(fit.d0_analytic) + " (rel " +
                             num(d0_rel, 2) + ")");
  std::string raw = "sqrt(t)e^{It}P at t=50,400: ";
  raw += num(fit.curve.points.front().scaled) + ", " + num(fit.curve.points.back().scaled);
  o.detail += "; " + raw;
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.check(secs < 120.0, "runtime " + num(secs, 3) + " s");
  return o;
}

Outcome criterion5(const Model& gauss, const Model& mathieu) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  SimulationOptions opts;
  opts.dt = 1e-3;
  opts.n_paths = 100000;
  opts.seed = 2024;

  auto agree = [&](const Model& m, const std::string& name, double a, double t, std::size_t n) {
    const double exact = exact_tail(m.family, m.obs, a, t);
    const auto est = estimate_tail_is(torus(m), m.config.frame, a, t, opts, n);
    const double z = std::abs(est.p_hat - exact) / est.stderr_;
    o.check(z < 3.0 && est.ess > 1e3, name + " IS " + num(est.p_hat) + " +- " + num(est.stderr_, 3) + " vs exact " +
                                          num(exact) + " (" + num(z, 2) + " se, ess " + num(est.ess, 5) + ")");
  };
  agree(gauss, "gaussian", 1.0, 16.0, kGaussianN);
  agree(mathieu, "mathieu", golden::mathieu_a, 30.0, kMathieuN);

  // Per-path zero-hit fraction of the naive estimator; a whole 1e5-path run sees no hit only
  // with probability (1 - p)^1e5, which the line reports alongside.
  const auto naive = estimate_tail_mc(torus(gauss), gauss.config.frame, 1.0, 16.0, opts, kGaussianN);
  const double zero_frac = 1.0 - double(naive.hits) / double(naive.n_paths);
  o.check(zero_frac >= 0.99, "naive zero-hit path fraction " + num(zero_frac, 8) + " (" + std::to_string(naive.hits) +
                                 " hits; P(run with no hit) = " + num(golden::naive_zero_hit_run_prob, 3) + ")");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.check(secs < 300.0, "runtime " + num(secs, 3) + " s");
  return o;
}

Outcome criterion6(const Model& gauss, const Model& mathieu) {
  Outcome o;
  const std::vector<double> t_grid{1.0, 1.5, 2.0};
  auto summarize = [](const ConditionReport& r) {
    std::string s;
    for (const auto& v : r.failures()) s += " " + v.condition + "@" + num(v.theta, 3);
    return s;
  };
  const auto rg = run_condition_suite(gauss.family, gauss.obs, {0.5, 1.0}, kSGrid, t_grid);
  o.check(rg.all_pass(), "gaussian " + std::to_string(rg.verdicts.size()) + " verdicts" + summarize(rg));
  const auto rm = run_condition_suite(mathieu.family, mathieu.obs, {golden::mathieu_theta_a, 0.5, 1.0}, kSGrid, t_grid);
  o.check(rm.all_pass(), "mathieu " + std::to_string(rm.verdicts.size()) + " verdicts" + summarize(rm));
  const Model neg = load(presets::checkerboard_chain(), 0);
  const auto rn = run_condition_suite(neg.family, neg.obs, {0.5}, kSGrid, {1.0, 2.0});
  o.check(!rn.passed("B3"), "period-2 chain B3 " + std::string(rn.passed("B3") ? "passes" : "fails"));
  return o;
}

std::string strip_timestamp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string first;
  std::getline(in, first);
  std::stringstream rest;
  rest << in.rdbuf();
  return rest.str();
}

Outcome criterion7(const Model& mathieu) {
  Outcome o;
  // Grid doubling.
  const TiltedFamily fine = TiltedFamily::from_model(mathieu.config.spec, 2 * kMathieuN);
  double worst = 0.0;
  for (double th : {0.0, 0.5, 1.0, golden::mathieu_theta_a}) {
    worst = std::max(worst, std::abs(cgf(fine, th) - cgf(mathieu.family, th)));
  }
  o.check(worst < 1e-6, "grid doubling max |dmu| " + num(worst, 3));

  // Duality residual on every row of two rate tables.
  double dual = 0.0;
  std::size_t rows = 0;
  const Model g = load(presets::gaussian_baseline(kGaussianN), kGaussianN);
  std::vector<double> ag, am;
  for (int k = 1; k <= 8; ++k) ag.push_back(0.25 * k);
  for (int k = 1; k <= 10; ++k) am.push_back(0.05 * k);
  for (const auto& table : {rate_table(g.family, ag), rate_table(mathieu.family, am)}) {
    for (const auto& r : table) {
      if (!r.point) {
        dual = std::nan("");
        continue;
      }
      dual = std::max(dual, std::abs(r.point->duality_residual));
      ++rows;
    }
  }
  o.check(dual < 1e-10, "duality residual max " + num(dual, 3) + " over " + std::to_string(rows) + " rows");

  // Serial vs parallel: CLI artifacts and raw trajectories.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ldpx_acceptance";
  fs::create_directories(dir);
  const std::string cfg = (dir / "run.json").string();
  std::ofstream(cfg) << R"({"model": "preset:mathieu", "grid_n": 64, "seed": 17,
    "rate": {"a_min": 0.05, "a_max": 0.5, "a_steps": 10},
    "spectral": {"theta_min": 0, "theta_max": 2, "theta_steps": 9},
    "simulate": {"a": 0.3, "t": 2, "dt": 0.001, "paths": 3000, "method": "tilted"}})";
  bool same = true;
  std::ostringstream sink;
  for (const std::string cmd : {"rate", "spectral"}) {
    std::string outputs[2];
    int idx = 0;
    for (const char* threads : {"1", "4"}) {
      const fs::path od = dir / (cmd + threads);
      cli::run({cmd, "--config", cfg, "--output-dir", od.string(), "--threads", threads}, sink, sink);
      outputs[idx++] = strip_timestamp((od / (cmd + ".csv")).string());
    }
    same = same && !outputs[0].empty() && outputs[0] == outputs[1];
  }
  SimulationOptions sim;
  sim.dt = 1e-3;
  sim.n_paths = 3000;
  sim.seed = 17;
  set_thread_count(1);
  const auto serial = estimate_tail_is(torus(mathieu), mathieu.config.frame, 0.3, 2.0, sim, 64);
  const auto traj1 = euler_maruyama(torus(mathieu), {0.0, 0.0}, 1.0, sim);
  set_thread_count(4);
  const auto parallel = estimate_tail_is(torus(mathieu), mathieu.config.frame, 0.3, 2.0, sim, 64);
  const auto traj4 = euler_maruyama(torus(mathieu), {0.0, 0.0}, 1.0, sim);
  set_thread_count(0);
  same = same && serial.p_hat == parallel.p_hat && serial.stderr_ == parallel.stderr_ && traj1.y == traj4.y &&
         traj1.x == traj4.x;
  fs::remove_all(dir);
  o.check(same, std::string("serial vs 4 threads ") + (same ? "byte-identical" : "differ"));
  return o;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const Model gauss = load(presets::gaussian_baseline(kGaussianN), kGaussianN);
  const Model mathieu = load(presets::mathieu(kMathieuN), kMathieuN);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 gaussian baseline exactness", criterion1},
      {"2 prefactor and Mills-ratio coefficients", criterion2},
      {"3 finite-chain oracle", criterion3},
      {"4 mathieu diffusivity and plateau", [&] { return criterion4(mathieu); }},
      {"5 importance sampling", [&] { return criterion5(gauss, mathieu); }},
      {"6 condition suite", [&] { return criterion6(gauss, mathieu); }},
      {"7 numerical hygiene", [&] { return criterion7(mathieu); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d/%zu criteria passed in %.1f s\n", int(criteria.size()) - failed, criteria.size(), total);
  return failed == 0 ? 0 : 1;
}
