#include "ldpx/presets.hpp"

#include "ldpx/errors.hpp"

namespace ldpx::presets {

namespace {

ModelConfig torus(std::size_t grid_n, PeriodicFunction drift, PeriodicFunction b) {
  TorusDiffusionSpec spec;
  spec.dim = 1;
  spec.diffusion.push_back({PeriodicFunction::constant(1.0), PeriodicFunction::constant(0.0)});
  spec.drift = {std::move(drift), PeriodicFunction::constant(0.0)};
  spec.obs_drift = std::move(b);
  spec.obs_noise = PeriodicFunction::constant(1.0);
  ModelConfig c;
  c.spec = std::move(spec);
  c.grid_n = grid_n;
  return c;
}

ModelConfig chain(Eigen::MatrixXd p, Eigen::MatrixXd h) {
  DiscreteChainSpec spec;
  const auto n = p.rows();
  spec.transition = std::move(p);
  spec.transition_increment = std::move(h);
  spec.increment_mean = Eigen::VectorXd::Zero(n);
  spec.increment_var = Eigen::VectorXd::Zero(n);
  ModelConfig c;
  c.spec = std::move(spec);
  return c;
}

}  // namespace

ModelConfig gaussian_baseline(std::size_t grid_n) {
  return torus(grid_n, PeriodicFunction::constant(0.0), PeriodicFunction::constant(0.0));
}

ModelConfig mathieu(std::size_t grid_n) {
  return torus(grid_n, PeriodicFunction::constant(0.0), PeriodicFunction::cosine(1, 1.0));
}

ModelConfig gradient_drift(std::size_t grid_n) {
  return torus(grid_n, PeriodicFunction::sine(1, -1.0), PeriodicFunction::cosine(1, 1.0));
}

ModelConfig two_state_pm1() {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 2, 0.5);
  Eigen::MatrixXd h(2, 2);
  h << 1.0, -1.0, 1.0, -1.0;
  return chain(p, h);
}

ModelConfig checkerboard_chain() {
  Eigen::MatrixXd p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  return chain(p, Eigen::MatrixXd::Ones(2, 2));
}

std::vector<std::string> names() { return {"gaussian", "mathieu", "gradient", "two_state", "checkerboard"}; }

ModelConfig by_name(const std::string& name, std::size_t grid_n) {
  if (name == "gaussian") return gaussian_baseline(grid_n);
  if (name == "mathieu") return mathieu(grid_n);
  if (name == "gradient") return gradient_drift(grid_n);
  if (name == "two_state") return two_state_pm1();
  if (name == "checkerboard") return checkerboard_chain();
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace ldpx::presets
