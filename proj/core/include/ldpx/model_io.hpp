#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

#include "ldpx/model.hpp"

namespace ldpx {

/// A model file: the model itself, its grid resolution and the evaluation frame.
struct ModelConfig {
  ModelSpec spec;
  std::size_t grid_n = 256;
  EvaluationFrame frame;
};

/// Strict parse: unknown keys, wrong types and missing required keys throw ConfigError
/// naming the offending path (e.g. "model.fields.drift[0]").
ModelConfig parse_model(const nlohmann::json& j, const std::string& where = "model");
nlohmann::json model_to_json(const ModelConfig& config);
/// Reads a model file; JSON syntax errors report the byte offset.
ModelConfig load_model(const std::string& path);

/// Function syntax: a number, or {"type": "constant" | "cos" | "sin" | "fourier" | "table", ...}.
PeriodicFunction parse_function(const nlohmann::json& j, const std::string& where, int dim);
nlohmann::json function_to_json(const PeriodicFunction& f, int dim);

/// Throws ConfigError if `j` has a key outside `allowed`.
void require_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed);

}  // namespace ldpx
