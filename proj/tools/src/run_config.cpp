#include "run_config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ldpx/errors.hpp"
#include "ldpx/presets.hpp"

namespace ldpx::cli {

using nlohmann::json;

namespace {

double positive(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config." + key + ": expected a number");
  const double v = j.get<double>();
  if (!(v > 0.0)) throw ConfigError("config." + key + ": must be positive");
  return v;
}

double real(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config." + key + ": expected a number");
  return j.get<double>();
}

long long whole(const json& j, const std::string& key, long long min) {
  if (!j.is_number_integer()) throw ConfigError("config." + key + ": expected an integer");
  const auto v = j.get<long long>();
  if (v < min) throw ConfigError("config." + key + ": must be at least " + std::to_string(min));
  return v;
}

std::vector<double> list(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw ConfigError("config." + key + ": expected a nonempty array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(real(v, key));
  return out;
}

template <typename Fn>
void section(const json& j, const char* key, std::initializer_list<const char*> allowed, Fn&& fn) {
  if (!j.contains(key)) return;
  const json& s = j.at(key);
  require_keys(s, std::string("config.") + key, allowed);
  fn(s, std::string(key) + ".");
}

ModelConfig resolve_model(const RunConfig& c, const std::string& base_dir) {
  if (c.model_inline) return parse_model(*c.model_inline, "config.model");
  const std::string& ref = c.model_ref;
  if (ref.rfind("preset:", 0) == 0) return presets::by_name(ref.substr(7));
  std::filesystem::path p(ref);
  if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
  if (!std::filesystem::exists(p)) throw ConfigError("config.model: file '" + p.string() + "' does not exist");
  return load_model(p.string());
}

}  // namespace

RunConfig parse_config(const json& j, const std::string& base_dir) {
  require_keys(j, "config",
               {"model", "grid_n", "theta_max", "theta_cap", "tol", "rate_tol", "seed", "threads", "output_dir",
                "rate", "spectral", "expand", "simulate", "verify"});
  RunConfig c;
  if (!j.contains("model")) throw ConfigError("config: missing key 'model'");
  const json& m = j.at("model");
  if (m.is_string()) {
    c.model_ref = m.get<std::string>();
  } else if (m.is_object()) {
    c.model_inline = m;
  } else {
    throw ConfigError("config.model: expected a file path, \"preset:<name>\" or an inline model object");
  }
  c.model = resolve_model(c, base_dir);
  c.grid_n = c.model.grid_n;
  if (j.contains("grid_n")) {
    const auto n = whole(j.at("grid_n"), "grid_n", 8);
    if (n % 2 != 0) throw ConfigError("config.grid_n: must be even");
    c.grid_n = static_cast<std::size_t>(n);
  }
  if (j.contains("theta_max")) c.theta_max = positive(j.at("theta_max"), "theta_max");
  if (j.contains("theta_cap")) c.theta_cap = positive(j.at("theta_cap"), "theta_cap");
  if (c.theta_cap < c.theta_max) throw ConfigError("config.theta_cap: must be at least theta_max");
  if (j.contains("tol")) c.tol = positive(j.at("tol"), "tol");
  if (j.contains("rate_tol")) c.rate_tol = positive(j.at("rate_tol"), "rate_tol");
  if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(whole(j.at("seed"), "seed", 0));
  if (j.contains("threads")) c.threads = static_cast<std::size_t>(whole(j.at("threads"), "threads", 0));
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("config.output_dir: expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  section(j, "rate", {"a_min", "a_max", "a_steps"}, [&](const json& s, const std::string& p) {
    if (s.contains("a_min")) c.rate.a_min = real(s.at("a_min"), p + "a_min");
    if (s.contains("a_max")) c.rate.a_max = real(s.at("a_max"), p + "a_max");
    if (s.contains("a_steps")) c.rate.a_steps = static_cast<int>(whole(s.at("a_steps"), p + "a_steps", 1));
  });
  section(j, "spectral", {"theta_min", "theta_max", "theta_steps"}, [&](const json& s, const std::string& p) {
    if (s.contains("theta_min")) c.spectral.theta_min = real(s.at("theta_min"), p + "theta_min");
    if (s.contains("theta_max")) c.spectral.theta_max = real(s.at("theta_max"), p + "theta_max");
    if (s.contains("theta_steps")) {
      c.spectral.theta_steps = static_cast<int>(whole(s.at("theta_steps"), p + "theta_steps", 1));
    }
  });
  section(j, "expand", {"a", "t_min", "t_max", "t_steps", "order", "svg"}, [&](const json& s, const std::string& p) {
    if (s.contains("a")) c.expand.a = real(s.at("a"), p + "a");
    if (s.contains("t_min")) c.expand.t_min = positive(s.at("t_min"), p + "t_min");
    if (s.contains("t_max")) c.expand.t_max = positive(s.at("t_max"), p + "t_max");
    if (s.contains("t_steps")) c.expand.t_steps = static_cast<int>(whole(s.at("t_steps"), p + "t_steps", 2));
    if (s.contains("order")) c.expand.order = static_cast<int>(whole(s.at("order"), p + "order", 0));
    if (s.contains("svg")) {
      if (!s.at("svg").is_boolean()) throw ConfigError("config.expand.svg: expected true or false");
      c.expand.svg = s.at("svg").get<bool>();
    }
  });
  section(j, "simulate", {"a", "t", "dt", "paths", "method"}, [&](const json& s, const std::string& p) {
    if (s.contains("a")) c.simulate.a = real(s.at("a"), p + "a");
    if (s.contains("t")) c.simulate.t = positive(s.at("t"), p + "t");
    if (s.contains("dt")) c.simulate.dt = positive(s.at("dt"), p + "dt");
    if (s.contains("paths")) c.simulate.paths = static_cast<std::size_t>(whole(s.at("paths"), p + "paths", 2));
    if (s.contains("method")) {
      const json& mj = s.at("method");
      if (!mj.is_string() || (mj.get<std::string>() != "naive" && mj.get<std::string>() != "tilted")) {
        throw ConfigError("config.simulate.method: expected \"naive\" or \"tilted\"");
      }
      c.simulate.method = mj.get<std::string>();
    }
  });
  section(j, "verify", {"theta_grid", "s_grid", "t_grid"}, [&](const json& s, const std::string& p) {
    if (s.contains("theta_grid")) c.verify.theta_grid = list(s.at("theta_grid"), p + "theta_grid");
    if (s.contains("s_grid")) c.verify.s_grid = list(s.at("s_grid"), p + "s_grid");
    if (s.contains("t_grid")) c.verify.t_grid = list(s.at("t_grid"), p + "t_grid");
  });
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(j, dir.empty() ? "." : dir.string());
}

json emit_config(const RunConfig& c) {
  json j;
  // Always inline the model so the emitted file stands on its own.
  j["model"] = model_to_json(c.model);
  j["grid_n"] = c.grid_n;
  j["theta_max"] = c.theta_max;
  j["theta_cap"] = c.theta_cap;
  j["tol"] = c.tol;
  j["rate_tol"] = c.rate_tol;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["rate"] = {{"a_min", c.rate.a_min}, {"a_max", c.rate.a_max}, {"a_steps", c.rate.a_steps}};
  j["spectral"] = {{"theta_min", c.spectral.theta_min},
                   {"theta_max", c.spectral.theta_max},
                   {"theta_steps", c.spectral.theta_steps}};
  j["expand"] = {{"a", c.expand.a},         {"t_min", c.expand.t_min}, {"t_max", c.expand.t_max},
                 {"t_steps", c.expand.t_steps}, {"order", c.expand.order}, {"svg", c.expand.svg}};
  j["simulate"] = {{"a", c.simulate.a},
                   {"t", c.simulate.t},
                   {"dt", c.simulate.dt},
                   {"paths", c.simulate.paths},
                   {"method", c.simulate.method}};
  j["verify"] = {{"theta_grid", c.verify.theta_grid}, {"s_grid", c.verify.s_grid}, {"t_grid", c.verify.t_grid}};
  return j;
}

std::string config_hash(const RunConfig& c) {
  // Only what determines the numbers: threads and the output location are left out.
  json j = emit_config(c);
  j.erase("threads");
  j.erase("output_dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return emit_config(a) == emit_config(b); }

}  // namespace ldpx::cli
