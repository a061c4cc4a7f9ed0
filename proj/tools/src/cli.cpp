#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ldpx/errors.hpp"
#include "ldpx/parallel.hpp"
#include "ldpx/simulate.hpp"
#include "ldpx/verify.hpp"
#include "report_io.hpp"
#include "run_config.hpp"

namespace ldpx::cli {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> grid_n;
  bool force = false;
  std::string emit_path;
  // rate
  std::optional<double> a_min, a_max;
  std::optional<int> a_steps;
  // spectral
  std::optional<double> theta_min, theta_max;
  std::optional<int> theta_steps;
  // expand / simulate share --a and --t flags on different subcommands
  std::optional<double> a, t_min, t_max, t, dt;
  std::optional<int> t_steps, order;
  std::optional<std::size_t> paths;
  std::optional<std::string> method;
  bool svg = false;
};

template <typename T>
void apply(const std::optional<T>& flag, T& target) {
  if (flag) target = *flag;
}

/// Flags win over the config file; the hash is taken after they are applied.
RunConfig effective_config(const std::string& command, const Flags& f) {
  RunConfig c = load_config(f.config);
  apply(f.output_dir, c.output_dir);
  apply(f.threads, c.threads);
  apply(f.seed, c.seed);
  if (f.grid_n) {
    if (*f.grid_n < 8 || *f.grid_n % 2 != 0) throw ConfigError("--grid-n must be even and at least 8");
    c.grid_n = *f.grid_n;
  }
  apply(f.a_min, c.rate.a_min);
  apply(f.a_max, c.rate.a_max);
  apply(f.a_steps, c.rate.a_steps);
  apply(f.theta_min, c.spectral.theta_min);
  apply(f.theta_max, c.spectral.theta_max);
  apply(f.theta_steps, c.spectral.theta_steps);
  if (command == "expand" || command == "report") {
    apply(f.a, c.expand.a);
    apply(f.t_min, c.expand.t_min);
    apply(f.t_max, c.expand.t_max);
    apply(f.t_steps, c.expand.t_steps);
    apply(f.order, c.expand.order);
    if (f.svg) c.expand.svg = true;
  }
  if (command == "simulate" || command == "report") {
    if (command == "simulate") apply(f.a, c.simulate.a);
    apply(f.t, c.simulate.t);
    apply(f.dt, c.simulate.dt);
    apply(f.paths, c.simulate.paths);
    apply(f.method, c.simulate.method);
  }
  // Re-run the schema checks on the merged values.
  return parse_config(emit_config(c));
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  return v;
}

/// Geometric horizons; chains need integer times, so those are rounded and deduplicated.
std::vector<double> horizons(const ExpandSettings& e, bool discrete) {
  if (!(e.t_max > e.t_min)) throw ConfigError("expand: t_max must exceed t_min");
  std::vector<double> t;
  for (int k = 0; k < e.t_steps; ++k) {
    double v = e.t_min * std::pow(e.t_max / e.t_min, static_cast<double>(k) / (e.t_steps - 1));
    if (discrete) v = std::round(v);
    if (t.empty() || v > t.back()) t.push_back(v);
  }
  return t;
}

struct Session {
  std::string command;
  RunConfig cfg;
  std::string hash;
  TiltedFamily family;
  Observation obs;

  RateOptions rate_opts() const {
    RateOptions r;
    r.theta_max = cfg.theta_max;
    r.theta_cap = cfg.theta_cap;
    r.tol = cfg.rate_tol;
    return r;
  }
  InversionOptions inversion_opts() const {
    InversionOptions o;
    o.rel_tol = cfg.tol;
    return o;
  }
  std::string file(const std::string& name) const { return (fs::path(cfg.output_dir) / name).string(); }
  CsvWriter csv(const std::string& name, std::vector<std::string> columns) const {
    return CsvWriter(file(name), command, hash, std::move(columns));
  }
  const TorusDiffusionSpec& torus() const {
    const auto* s = std::get_if<TorusDiffusionSpec>(&cfg.model.spec);
    if (!s) throw PreconditionError(command + ": path simulation needs a torus diffusion model");
    return *s;
  }
};

Session open_session(const std::string& command, const Flags& f) {
  RunConfig cfg = effective_config(command, f);
  const ValidationReport v = validate_frame(cfg.model.frame, cfg.model.spec, cfg.grid_n);
  if (!v.ok()) {
    std::string msg = "model does not validate:";
    for (const auto& issue : v.issues) msg += "\n  " + issue;
    throw ConfigError(msg);
  }
  if (cfg.threads > 0) set_thread_count(cfg.threads);
  fs::create_directories(cfg.output_dir);
  TiltedFamily family = TiltedFamily::from_model(cfg.model.spec, cfg.grid_n);
  Observation obs = resolve_observation(cfg.model.frame, family);
  std::string hash = config_hash(cfg);
  return Session{command, std::move(cfg), std::move(hash), std::move(family), std::move(obs)};
}

void print_verdicts(const ConditionReport& report, std::ostream& out) {
  out << std::left << std::setw(15) << "condition" << std::setw(9) << "theta" << std::setw(26) << "metric"
      << std::setw(14) << "value" << std::setw(14) << "threshold" << "verdict\n";
  for (const auto& v : report.verdicts) {
    std::ostringstream th, val, lim;
    th << std::setprecision(4) << v.theta;
    val << std::scientific << std::setprecision(4) << v.value;
    lim << (v.compare == Verdict::Compare::above ? "> " : "< ") << std::scientific << std::setprecision(2)
        << v.threshold;
    out << std::setw(15) << v.condition << std::setw(9) << th.str() << std::setw(26) << v.metric << std::setw(14)
        << val.str() << std::setw(14) << lim.str() << (v.pass() ? "pass" : "FAIL");
    if (!v.note.empty()) out << "  (" << v.note << ")";
    out << '\n';
  }
  out << std::right;
}

void write_verdicts(const Session& s, const std::string& name, const ConditionReport& report) {
  auto csv = s.csv(name, {"condition", "theta", "metric", "value", "threshold", "compare", "pass", "note"});
  for (const auto& v : report.verdicts) {
    csv.row({v.condition, v.theta, v.metric, v.value, v.threshold,
             std::string(v.compare == Verdict::Compare::above ? "above" : "below"), std::string(v.pass() ? "1" : "0"),
             v.note});
  }
}

ConditionReport suite(const Session& s, const std::vector<double>& thetas) {
  SuiteOptions opts;
  return run_condition_suite(s.family, s.obs, thetas, s.cfg.verify.s_grid, s.cfg.verify.t_grid, opts);
}

int cmd_validate(const Session& s, std::ostream& out) {
  const ValidationReport v = validate_frame(s.cfg.model.frame, s.cfg.model.spec, s.cfg.grid_n);
  const double mu0 = cgf(s.family, 0.0);
  auto csv = s.csv("validate.csv", {"kind", "states", "grid_n", "symmetric", "lattice", "mu0", "warnings"});
  std::string warnings;
  for (const auto& w : v.warnings) warnings += (warnings.empty() ? "" : "; ") + w;
  csv.row({std::string(s.family.discrete() ? "discrete_chain" : "torus_diffusion"),
           static_cast<long long>(s.family.size()), static_cast<long long>(s.cfg.grid_n),
           static_cast<long long>(s.family.symmetric()), static_cast<long long>(s.family.lattice()), mu0, warnings});
  out << "model ok: " << s.family.size() << " states, mu(0) = " << format_real(mu0) << '\n';
  for (const auto& w : v.warnings) out << "warning: " << w << '\n';
  return ok;
}

int cmd_rate(const Session& s, std::ostream& out, std::ostream& err) {
  const auto a_list = linspace(s.cfg.rate.a_min, s.cfg.rate.a_max, s.cfg.rate.a_steps);
  const auto rows = rate_table(s.family, a_list, s.rate_opts());
  auto csv = s.csv("rate.csv", {"a", "theta_a", "I", "Isecond", "mu", "duality_residual", "error"});
  std::size_t good = 0;
  for (const auto& r : rows) {
    if (r.point) {
      const auto& p = *r.point;
      csv.row({r.a, p.theta_a, p.I, p.Isecond, p.mu, p.duality_residual, std::string()});
      ++good;
    } else {
      const double nan = std::nan("");
      csv.row({r.a, nan, nan, nan, nan, nan, r.error});
      err << "a = " << format_real(r.a) << ": " << r.error << '\n';
    }
  }
  out << "wrote " << csv.path() << " (" << good << "/" << rows.size() << " rows solved)\n";
  return good > 0 ? ok : failure;
}

int cmd_spectral(const Session& s, std::ostream& out) {
  const auto thetas = linspace(s.cfg.spectral.theta_min, s.cfg.spectral.theta_max, s.cfg.spectral.theta_steps);
  struct Row {
    CgfDerivatives d;
    double gap = 0.0;
    std::string error;
  };
  std::vector<Row> rows(thetas.size());
  parallel_for(thetas.size(), [&](std::size_t k) {
    try {
      rows[k].d = cgf_derivatives(s.family, thetas[k]);
      rows[k].gap = top_eigen(s.family, thetas[k]).gap;
    } catch (const Error& e) {
      rows[k].error = e.what();
    }
  });
  auto csv = s.csv("spectral.csv", {"theta", "mu", "mu1", "mu2", "gap", "error"});
  const double nan = std::nan("");
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const auto& r = rows[k];
    if (r.error.empty()) {
      csv.row({thetas[k], r.d.mu, r.d.d1, r.d.d2, r.gap, std::string()});
    } else {
      csv.row({thetas[k], nan, nan, nan, nan, r.error});
    }
  }
  out << "wrote " << csv.path() << '\n';
  return ok;
}

void write_fit(const Session& s, const CoeffFit& fit, const std::string& name) {
  auto csv = s.csv(name, {"quantity", "value"});
  csv.row({std::string("a"), fit.a});
  csv.row({std::string("theta_a"), fit.curve.rate.theta_a});
  csv.row({std::string("I"), fit.curve.rate.I});
  csv.row({std::string("order"), static_cast<long long>(fit.order)});
  for (std::size_t k = 0; k < fit.coefficients.size(); ++k) {
    csv.row({"D" + std::to_string(k), fit.coefficients[k]});
  }
  csv.row({std::string("D0_analytic"), fit.d0_analytic});
  csv.row({std::string("D0_rel_error"), fit.d0_rel_error});
  csv.row({std::string("residual"), fit.residual});
  csv.row({std::string("condition"), fit.condition});
  csv.row({std::string("D0_stability"), fit.d0_stability});
  csv.row({std::string("prefactor_agrees"), static_cast<long long>(fit.prefactor_agrees)});
}

void print_fit(const CoeffFit& fit, std::ostream& out) {
  out << "fit at a = " << fit.a << " (order " << fit.order << ", theta_a = " << fit.curve.rate.theta_a
      << ", I = " << format_real(fit.curve.rate.I) << ")\n";
  for (std::size_t k = 0; k < fit.coefficients.size(); ++k) {
    out << "  D" << k << " = " << format_real(fit.coefficients[k]) << '\n';
  }
  out << "  D0 analytic = " << format_real(fit.d0_analytic) << ", relative error " << format_real(fit.d0_rel_error)
      << (fit.prefactor_agrees ? " (agrees)" : " (DISAGREES)") << '\n';
  out << "  residual " << format_real(fit.residual) << ", condition " << format_real(fit.condition) << '\n';
}

CoeffFit run_fit(const Session& s) {
  const auto& e = s.cfg.expand;
  return extract_coefficients(s.family, s.obs, e.a, horizons(e, s.family.discrete()), e.order, s.rate_opts(),
                              s.inversion_opts());
}

int cmd_expand(const Session& s, bool force, std::ostream& out, std::ostream& err) {
  const auto& e = s.cfg.expand;
  const RatePoint rp = rate_point(s.family, e.a, s.rate_opts());
  const ConditionReport report = suite(s, {rp.theta_a});
  write_verdicts(s, "expand_conditions.csv", report);
  if (!report.all_pass()) {
    err << "condition suite fails at theta_a = " << rp.theta_a << ":\n";
    print_verdicts(ConditionReport{report.failures()}, err);
    if (!force) {
      err << "refusing to expand; rerun with --force to override\n";
      return conditions_failed;
    }
    err << "--force given: continuing with untrusted results\n";
  }
  const CoeffFit fit = run_fit(s);
  auto csv = s.csv("expand.csv", {"t", "P", "eIt_P", "sqrt_t_eIt_P"});
  for (const auto& p : fit.curve.points) csv.row({p.t, p.p, p.normalized, p.scaled});
  write_fit(s, fit, "expand_fit.csv");
  print_fit(fit, out);
  if (e.svg) {
    Series curve{"sqrt(t) e^{It} P", {}, {}, false};
    for (const auto& p : fit.curve.points) {
      curve.x.push_back(1.0 / p.t);
      curve.y.push_back(p.scaled);
    }
    Series d0{"analytic D0", {0.0}, {fit.d0_analytic}, true};
    write_svg_plot(s.file("expand.svg"), "Tail prefactor at a = " + format_real(e.a), "1/t", "sqrt(t) e^{It} P",
                   {curve, d0});
  }
  out << "wrote " << csv.path() << '\n';
  return ok;
}

ISEstimate run_simulation(const Session& s, double& wall_time) {
  const auto& m = s.cfg.simulate;
  SimulationOptions opts;
  opts.dt = m.dt;
  opts.n_paths = m.paths;
  opts.seed = s.cfg.seed;
  const auto start = std::chrono::steady_clock::now();
  ISEstimate est = m.method == "tilted"
                       ? estimate_tail_is(s.torus(), s.cfg.model.frame, m.a, m.t, opts, s.cfg.grid_n, s.rate_opts())
                       : estimate_tail_mc(s.torus(), s.cfg.model.frame, m.a, m.t, opts, s.cfg.grid_n);
  wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

int cmd_simulate(const Session& s, std::ostream& out) {
  const auto& m = s.cfg.simulate;
  double wall = 0.0;
  const ISEstimate est = run_simulation(s, wall);
  auto csv = s.csv("simulate.csv", {"method", "a", "t", "dt", "paths", "seed", "theta", "hits", "p_hat", "stderr",
                                    "ess", "wall_time"});
  csv.row({m.method, m.a, m.t, m.dt, static_cast<long long>(m.paths), static_cast<long long>(s.cfg.seed), est.theta,
           static_cast<long long>(est.hits), est.p_hat, est.stderr_, est.ess, wall});
  out << m.method << ": p_hat = " << format_real(est.p_hat) << " +- " << format_real(est.stderr_)
      << ", ess = " << est.ess << ", hits = " << est.hits << "/" << m.paths << '\n';
  return ok;
}

int cmd_verify(const Session& s, std::ostream& out) {
  const ConditionReport report = suite(s, s.cfg.verify.theta_grid);
  write_verdicts(s, "conditions.csv", report);
  print_verdicts(report, out);
  out << (report.all_pass() ? "all conditions pass\n" : "condition suite FAILED\n");
  return report.all_pass() ? ok : conditions_failed;
}

int cmd_report(const Session& s, std::ostream& out, std::ostream& err) {
  auto csv = s.csv("report.csv", {"quantity", "value", "stderr", "reference", "rel_error", "note"});
  const double nan = std::nan("");
  int code = ok;

  const ConditionReport report = suite(s, s.cfg.verify.theta_grid);
  write_verdicts(s, "report_conditions.csv", report);
  const std::size_t failed = report.failures().size();
  csv.row({std::string("conditions_failed"), static_cast<double>(failed), nan, 0.0, nan, std::string()});
  if (failed > 0) {
    err << "condition suite: " << failed << " failing verdicts\n";
    print_verdicts(ConditionReport{report.failures()}, err);
    code = conditions_failed;
  }

  try {
    const CoeffFit fit = run_fit(s);
    csv.row({std::string("D0_analytic"), fit.d0_analytic, nan, nan, nan, std::string()});
    for (std::size_t k = 0; k < fit.coefficients.size(); ++k) {
      const double ref = k == 0 ? fit.d0_analytic : nan;
      const double rel = k == 0 ? fit.d0_rel_error : nan;
      csv.row({"D" + std::to_string(k) + "_fit", fit.coefficients[k], nan, ref, rel, std::string()});
    }
    print_fit(fit, out);
  } catch (const Error& e) {
    csv.row({std::string("D0_fit"), nan, nan, nan, nan, std::string(e.what())});
    err << "fit: " << e.what() << '\n';
    if (code == ok) code = failure;
  }

  const auto& m = s.cfg.simulate;
  double exact = nan;
  try {
    exact = exact_tail(s.family, s.obs, m.a, m.t, s.rate_opts(), s.inversion_opts());
    csv.row({std::string("P_exact"), exact, nan, nan, nan, std::string()});
  } catch (const Error& e) {
    csv.row({std::string("P_exact"), nan, nan, nan, nan, std::string(e.what())});
    err << "exact tail: " << e.what() << '\n';
  }
  if (!s.family.discrete()) {
    try {
      double wall = 0.0;
      const ISEstimate est = run_simulation(s, wall);
      const double rel = std::isfinite(exact) ? std::abs(est.p_hat - exact) / exact : nan;
      csv.row({"P_" + m.method, est.p_hat, est.stderr_, exact, rel, std::string()});
      out << m.method << " estimate " << format_real(est.p_hat) << " +- " << format_real(est.stderr_)
          << " vs exact " << format_real(exact) << '\n';
    } catch (const Error& e) {
      csv.row({"P_" + m.method, nan, nan, exact, nan, std::string(e.what())});
      err << "simulation: " << e.what() << '\n';
    }
  }
  out << "wrote " << csv.path() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Large-deviation rates and tail expansions for additive functionals", "ldp-expand"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "JSON run configuration")->required();
    sub->add_option("--output-dir", f.output_dir, "Directory for CSV/SVG artifacts");
    sub->add_option("--threads", f.threads, "Worker threads (0 = LDP_EXPAND_THREADS or all cores)");
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--grid-n", f.grid_n, "Grid points per dimension");
  };
  auto expand_flags = [&](CLI::App* sub) {
    sub->add_option("--a", f.a, "Tail level");
    sub->add_option("--t-min", f.t_min, "Smallest horizon");
    sub->add_option("--t-max", f.t_max, "Largest horizon");
    sub->add_option("--t-steps", f.t_steps, "Number of geometric horizons");
    sub->add_option("--order", f.order, "Expansion order r (fits D_0 .. D_{r/2})");
  };
  auto sim_flags = [&](CLI::App* sub, bool with_a) {
    if (with_a) sub->add_option("--a", f.a, "Tail level");
    sub->add_option("--t", f.t, "Horizon");
    sub->add_option("--dt", f.dt, "Euler-Maruyama step");
    sub->add_option("--paths", f.paths, "Number of paths");
    sub->add_option("--method", f.method, "naive or tilted")->check(CLI::IsMember({"naive", "tilted"}));
  };

  auto* validate = app.add_subcommand("validate", "Check a configuration and its model");
  common(validate);
  auto* emit = app.add_subcommand("emit-config", "Print the configuration with every default filled in");
  common(emit);
  emit->add_option("--out", f.emit_path, "Write to this file instead of stdout");
  auto* rate = app.add_subcommand("rate", "Rate function table I(a)");
  common(rate);
  rate->add_option("--a-min", f.a_min);
  rate->add_option("--a-max", f.a_max);
  rate->add_option("--a-steps", f.a_steps);
  auto* spectral = app.add_subcommand("spectral", "Cumulant generating function and spectral gap over theta");
  common(spectral);
  spectral->add_option("--theta-min", f.theta_min);
  spectral->add_option("--theta-max", f.theta_max);
  spectral->add_option("--theta-steps", f.theta_steps);
  auto* expand = app.add_subcommand("expand", "Exact tail curve and fitted expansion coefficients");
  common(expand);
  expand_flags(expand);
  expand->add_flag("--svg", f.svg, "Also write expand.svg");
  expand->add_flag("--force", f.force, "Expand even when the condition suite fails");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo tail estimate");
  common(simulate);
  sim_flags(simulate, true);
  auto* verify = app.add_subcommand("verify-conditions", "Run the condition suite over the theta grid");
  common(verify);
  auto* report = app.add_subcommand("report", "Compare analytic D_0, fitted D_k and simulation");
  common(report);
  expand_flags(report);
  sim_flags(report, false);

  if (!args.empty() && !args.front().empty() && args.front()[0] != '-' && !app.get_subcommand_no_throw(args.front())) {
    err << "error: unknown command '" << args.front() << "'\n\n" << app.help();
    return failure;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return failure;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "emit-config") {
      const std::string text = emit_config(effective_config(command, f)).dump(2) + "\n";
      if (f.emit_path.empty()) {
        out << text;
      } else {
        std::ofstream file(f.emit_path, std::ios::binary);
        if (!file) throw Error("cannot write '" + f.emit_path + "'");
        file << text;
      }
      return ok;
    }
    const Session s = open_session(command, f);
    if (command == "validate") return cmd_validate(s, out);
    if (command == "rate") return cmd_rate(s, out, err);
    if (command == "spectral") return cmd_spectral(s, out);
    if (command == "expand") return cmd_expand(s, f.force, out, err);
    if (command == "simulate") return cmd_simulate(s, out);
    if (command == "verify-conditions") return cmd_verify(s, out);
    if (command == "report") return cmd_report(s, out, err);
  } catch (const ConditionError& e) {
    err << "condition failure: " << e.what() << '\n';
    return conditions_failed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}

}  // namespace ldpx::cli
