#include "ldpx/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ldpx/errors.hpp"

namespace ldpx {

using nlohmann::json;

void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

namespace {

const json& need(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ConfigError(where + ": expected an integer");
  return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Eigen::MatrixXd matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = numbers(j[static_cast<std::size_t>(r)], where + "[" + std::to_string(r) + "]");
    if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != m.cols()) throw ConfigError(where + ": ragged rows");
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

Eigen::VectorXd vector(const json& j, const std::string& where) {
  const auto v = numbers(j, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::array<int, 2> wave_vector(const json& j, const std::string& where, int dim) {
  if (j.is_number_integer()) return {j.get<int>(), 0};
  if (j.is_array() && j.size() == 2) {
    std::array<int, 2> k{integer(j[0], where + "[0]"), integer(j[1], where + "[1]")};
    if (dim == 1 && k[1] != 0) throw ConfigError(where + ": second wave number must be 0 in one dimension");
    return k;
  }
  throw ConfigError(where + ": expected an integer or a pair of integers");
}

json wave_json(const std::array<int, 2>& k, int dim) {
  if (dim == 1) return k[0];
  return json::array({k[0], k[1]});
}

PeriodicTable parse_table(const json& j, const std::string& where, int dim) {
  require_keys(j, where, {"type", "m", "values"});
  const int m = integer(need(j, where, "m"), where + ".m");
  if (m <= 0) throw ConfigError(where + ".m: must be positive");
  return PeriodicTable{dim, static_cast<std::size_t>(m), numbers(need(j, where, "values"), where + ".values")};
}

json table_json(const PeriodicTable& t) {
  return json{{"type", "table"}, {"m", t.m}, {"values", t.values}};
}

TestVector parse_test_vector(const json& j, const std::string& where, int dim) {
  TestVector tv;
  if (j.is_string()) {
    if (j.get<std::string>() != "ones") throw ConfigError(where + ": the only named test vector is \"ones\"");
    return tv;
  }
  if (j.is_array()) {
    tv.source = numbers(j, where);
    return tv;
  }
  tv.source = parse_function(j, where, dim);
  return tv;
}

json test_vector_json(const TestVector& tv, int dim) {
  if (tv.is_ones()) return "ones";
  if (const auto* v = std::get_if<std::vector<double>>(&tv.source)) return *v;
  return function_to_json(std::get<PeriodicFunction>(tv.source), dim);
}

EvaluationFrame parse_frame(const json& j, const std::string& where, int dim) {
  require_keys(j, where, {"start_index", "start_point", "test_vector"});
  EvaluationFrame f;
  if (j.contains("start_index") && j.contains("start_point")) {
    throw ConfigError(where + ": give start_index or start_point, not both");
  }
  if (j.contains("start_index")) {
    const int s = integer(j.at("start_index"), where + ".start_index");
    if (s < 0) throw ConfigError(where + ".start_index: must be nonnegative");
    f.start_index = static_cast<std::size_t>(s);
  }
  if (j.contains("start_point")) {
    const auto p = numbers(j.at("start_point"), where + ".start_point");
    if (p.empty() || p.size() > 2) throw ConfigError(where + ".start_point: expected 1 or 2 coordinates");
    f.start_point = Point{p[0], p.size() == 2 ? p[1] : 0.0};
  }
  if (j.contains("test_vector")) f.test_vector = parse_test_vector(j.at("test_vector"), where + ".test_vector", dim);
  return f;
}

json frame_json(const EvaluationFrame& f, int dim) {
  json j;
  if (f.start_point) {
    j["start_point"] = dim == 1 ? json::array({(*f.start_point)[0]})
                                : json::array({(*f.start_point)[0], (*f.start_point)[1]});
  } else {
    j["start_index"] = f.start_index;
  }
  j["test_vector"] = test_vector_json(f.test_vector, dim);
  return j;
}

VectorField parse_vector_field(const json& j, const std::string& where, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw ConfigError(where + ": expected an array of " + std::to_string(dim) + " component(s)");
  }
  VectorField v;
  for (int c = 0; c < dim; ++c) {
    v[static_cast<std::size_t>(c)] =
        parse_function(j[static_cast<std::size_t>(c)], where + "[" + std::to_string(c) + "]", dim);
  }
  return v;
}

json vector_field_json(const VectorField& v, int dim) {
  json j = json::array();
  for (int c = 0; c < dim; ++c) j.push_back(function_to_json(v[static_cast<std::size_t>(c)], dim));
  return j;
}

}  // namespace

PeriodicFunction parse_function(const json& j, const std::string& where, int dim) {
  if (j.is_number()) return PeriodicFunction::constant(j.get<double>());
  if (!j.is_object()) throw ConfigError(where + ": expected a number or a function object");
  const json& type_j = need(j, where, "type");
  if (!type_j.is_string()) throw ConfigError(where + ".type: expected a string");
  const std::string type = type_j.get<std::string>();
  if (type == "constant") {
    require_keys(j, where, {"type", "value"});
    return PeriodicFunction::constant(number(need(j, where, "value"), where + ".value"));
  }
  if (type == "cos" || type == "sin") {
    require_keys(j, where, {"type", "k", "amplitude"});
    const auto k = wave_vector(need(j, where, "k"), where + ".k", dim);
    const double amp = number(need(j, where, "amplitude"), where + ".amplitude");
    FourierTerm term{k, type == "cos" ? amp : 0.0, type == "sin" ? amp : 0.0};
    return PeriodicFunction::fourier(0.0, {term});
  }
  if (type == "fourier") {
    require_keys(j, where, {"type", "mean", "terms", "table"});
    const double c0 = j.contains("mean") ? number(j.at("mean"), where + ".mean") : 0.0;
    std::vector<FourierTerm> terms;
    if (j.contains("terms")) {
      const json& arr = j.at("terms");
      if (!arr.is_array()) throw ConfigError(where + ".terms: expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string w = where + ".terms[" + std::to_string(i) + "]";
        require_keys(arr[i], w, {"k", "cos", "sin"});
        FourierTerm t;
        t.k = wave_vector(need(arr[i], w, "k"), w + ".k", dim);
        if (arr[i].contains("cos")) t.cos_coef = number(arr[i].at("cos"), w + ".cos");
        if (arr[i].contains("sin")) t.sin_coef = number(arr[i].at("sin"), w + ".sin");
        terms.push_back(t);
      }
    }
    PeriodicFunction f = PeriodicFunction::fourier(c0, std::move(terms));
    if (j.contains("table")) {
      f = f.plus(PeriodicFunction::table(parse_table(j.at("table"), where + ".table", dim)));
    }
    return f;
  }
  if (type == "table") return PeriodicFunction::table(parse_table(j, where, dim));
  throw ConfigError(where + ".type: unknown function type '" + type + "'");
}

json function_to_json(const PeriodicFunction& f, int dim) {
  if (f.is_constant()) return f.mean_part();
  if (f.terms().empty() && f.mean_part() == 0.0) return table_json(*f.table_part());
  json j{{"type", "fourier"}, {"mean", f.mean_part()}};
  json terms = json::array();
  for (const auto& t : f.terms()) terms.push_back({{"k", wave_json(t.k, dim)}, {"cos", t.cos_coef}, {"sin", t.sin_coef}});
  j["terms"] = terms;
  if (f.table_part()) j["table"] = table_json(*f.table_part());
  return j;
}

ModelConfig parse_model(const json& j, const std::string& where) {
  require_keys(j, where, {"kind", "grid_n", "fields", "observable", "eval_frame"});
  const json& kind_j = need(j, where, "kind");
  if (!kind_j.is_string()) throw ConfigError(where + ".kind: expected a string");
  const std::string kind = kind_j.get<std::string>();
  ModelConfig config;
  if (j.contains("grid_n")) {
    const int n = integer(j.at("grid_n"), where + ".grid_n");
    if (n < 8 || n % 2 != 0) throw ConfigError(where + ".grid_n: must be an even integer >= 8");
    config.grid_n = static_cast<std::size_t>(n);
  }
  const json& fields = need(j, where, "fields");
  const json& obs = need(j, where, "observable");
  const std::string fw = where + ".fields";
  const std::string ow = where + ".observable";

  int dim = 1;
  if (kind == "torus_diffusion") {
    require_keys(fields, fw, {"dim", "diffusion", "drift"});
    require_keys(obs, ow, {"drift", "noise"});
    TorusDiffusionSpec spec;
    if (fields.contains("dim")) {
      dim = integer(fields.at("dim"), fw + ".dim");
      if (dim != 1 && dim != 2) throw ConfigError(fw + ".dim: must be 1 or 2");
    }
    spec.dim = dim;
    const json& diff = need(fields, fw, "diffusion");
    if (!diff.is_array() || diff.empty()) throw ConfigError(fw + ".diffusion: expected a nonempty array of vector fields");
    for (std::size_t i = 0; i < diff.size(); ++i) {
      spec.diffusion.push_back(parse_vector_field(diff[i], fw + ".diffusion[" + std::to_string(i) + "]", dim));
    }
    if (fields.contains("drift")) {
      spec.drift = parse_vector_field(fields.at("drift"), fw + ".drift", dim);
    }
    spec.obs_drift = obs.contains("drift") ? parse_function(obs.at("drift"), ow + ".drift", dim)
                                           : PeriodicFunction::constant(0.0);
    spec.obs_noise = parse_function(need(obs, ow, "noise"), ow + ".noise", dim);
    config.spec = std::move(spec);
  } else if (kind == "discrete_chain") {
    require_keys(fields, fw, {"transition", "transition_increment"});
    require_keys(obs, ow, {"increment_mean", "increment_var"});
    DiscreteChainSpec spec;
    spec.transition = matrix(need(fields, fw, "transition"), fw + ".transition");
    const auto n = spec.transition.rows();
    spec.transition_increment = fields.contains("transition_increment")
                                    ? matrix(fields.at("transition_increment"), fw + ".transition_increment")
                                    : Eigen::MatrixXd::Zero(n, spec.transition.cols());
    spec.increment_mean =
        obs.contains("increment_mean") ? vector(obs.at("increment_mean"), ow + ".increment_mean") : Eigen::VectorXd::Zero(n);
    spec.increment_var =
        obs.contains("increment_var") ? vector(obs.at("increment_var"), ow + ".increment_var") : Eigen::VectorXd::Zero(n);
    if (spec.transition_increment.rows() != n || spec.transition_increment.cols() != spec.transition.cols()) {
      throw ConfigError(fw + ".transition_increment: shape must match transition");
    }
    if (spec.increment_mean.size() != n) throw ConfigError(ow + ".increment_mean: one entry per state");
    if (spec.increment_var.size() != n) throw ConfigError(ow + ".increment_var: one entry per state");
    config.spec = std::move(spec);
  } else {
    throw ConfigError(where + ".kind: expected \"torus_diffusion\" or \"discrete_chain\", got \"" + kind + "\"");
  }
  if (j.contains("eval_frame")) config.frame = parse_frame(j.at("eval_frame"), where + ".eval_frame", dim);
  return config;
}

json model_to_json(const ModelConfig& config) {
  json j;
  int dim = 1;
  if (const auto* d = std::get_if<TorusDiffusionSpec>(&config.spec)) {
    dim = d->dim;
    j["kind"] = "torus_diffusion";
    j["grid_n"] = config.grid_n;
    json diff = json::array();
    for (const auto& v : d->diffusion) diff.push_back(vector_field_json(v, dim));
    j["fields"] = {{"dim", dim}, {"diffusion", diff}, {"drift", vector_field_json(d->drift, dim)}};
    j["observable"] = {{"drift", function_to_json(d->obs_drift, dim)}, {"noise", function_to_json(d->obs_noise, dim)}};
  } else {
    const auto& c = std::get<DiscreteChainSpec>(config.spec);
    j["kind"] = "discrete_chain";
    j["fields"] = {{"transition", to_json(c.transition)}, {"transition_increment", to_json(c.transition_increment)}};
    j["observable"] = {{"increment_mean", to_json(c.increment_mean)}, {"increment_var", to_json(c.increment_var)}};
  }
  j["eval_frame"] = frame_json(config.frame, dim);
  return j;
}

ModelConfig load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_model(j);
}

}  // namespace ldpx
