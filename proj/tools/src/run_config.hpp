#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ldpx/model_io.hpp"

namespace ldpx::cli {

struct RateGrid {
  double a_min = 0.25;
  double a_max = 2.0;
  int a_steps = 8;
};

struct SpectralGrid {
  double theta_min = 0.0;
  double theta_max = 2.0;
  int theta_steps = 9;
};

struct ExpandSettings {
  double a = 1.0;
  double t_min = 16.0;
  double t_max = 256.0;
  int t_steps = 9;
  int order = 6;
  bool svg = false;
};

struct SimulateSettings {
  double a = 1.0;
  double t = 16.0;
  double dt = 1e-3;
  std::size_t paths = 10000;
  std::string method = "tilted";
};

struct VerifySettings {
  std::vector<double> theta_grid{0.0, 0.5, 1.0};
  std::vector<double> s_grid{0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 50.0};
  std::vector<double> t_grid{1.0, 1.5, 2.0, 3.0};
};

/// Everything a command needs. Defaults are the documented ones.
struct RunConfig {
  /// "preset:<name>", a model file path (relative to the config file), or empty for inline.
  std::string model_ref;
  std::optional<nlohmann::json> model_inline;
  ModelConfig model;
  std::size_t grid_n = 256;
  double theta_max = 8.0;
  double theta_cap = 64.0;
  double tol = 1e-6;
  double rate_tol = 1e-10;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string output_dir = "ldp-out";
  RateGrid rate;
  SpectralGrid spectral;
  ExpandSettings expand;
  SimulateSettings simulate;
  VerifySettings verify;
};

/// Strict schema: unknown keys and bad values throw ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
/// Canonical JSON with every default spelled out; parse_config(emit_config(c)) == c.
nlohmann::json emit_config(const RunConfig& c);
/// FNV-1a of the canonical JSON without `threads` and `output_dir`, as 16 hex digits.
std::string config_hash(const RunConfig& c);

bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace ldpx::cli
