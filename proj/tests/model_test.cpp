#include <gtest/gtest.h>

#include <cmath>

#include "ldpx/discretize.hpp"
#include "ldpx/errors.hpp"
#include "ldpx/model_io.hpp"
#include "ldpx/presets.hpp"

using namespace ldpx;
using nlohmann::json;

namespace {

json mathieu_json() {
  return json::parse(R"({
    "kind": "torus_diffusion", "grid_n": 64,
    "fields": {"dim": 1, "diffusion": [[1.0]], "drift": [0.0]},
    "observable": {"drift": {"type": "cos", "k": 1, "amplitude": 1.0}, "noise": 1.0},
    "eval_frame": {"start_index": 0, "test_vector": "ones"}
  })");
}

}  // namespace

TEST(PeriodicFunction, CatalogValues) {
  const auto c = PeriodicFunction::cosine(1, 2.0);
  EXPECT_NEAR(c(0.0), 2.0, 1e-15);
  EXPECT_NEAR(c(0.25), 0.0, 1e-15);
  EXPECT_NEAR(PeriodicFunction::sine(2, 1.0)(0.125), 1.0, 1e-15);
  EXPECT_EQ(PeriodicFunction::cosine(3, 1.0).max_harmonic(), 3);
  EXPECT_TRUE(PeriodicFunction::constant(4.0).is_constant());
}

TEST(PeriodicFunction, TableInterpolatesSmoothData) {
  PeriodicTable t{1, 64, {}};
  for (std::size_t j = 0; j < 64; ++j) t.values.push_back(std::sin(2 * M_PI * j / 64.0));
  const auto f = PeriodicFunction::table(t);
  for (double x : {0.013, 0.37, 0.91}) EXPECT_NEAR(f(x), std::sin(2 * M_PI * x), 1e-4);
}

TEST(Grid, IndexWrapsAndNearest) {
  PeriodicGrid g(1, 16);
  EXPECT_EQ(g.index(-1), 15u);
  EXPECT_EQ(g.index(17), 1u);
  EXPECT_EQ(g.nearest({0.99, 0.0}), 0u);
  EXPECT_THROW(PeriodicGrid(1, 7), PreconditionError);
}

TEST(Validation, PresetsAreClean) {
  for (const auto& name : presets::names()) {
    const auto m = presets::by_name(name, 64);
    EXPECT_TRUE(validate_frame(m.frame, m.spec, 64).ok()) << name;
  }
}

TEST(Validation, RejectsDegenerateNoiseAndBadChains) {
  auto m = presets::mathieu(64);
  std::get<TorusDiffusionSpec>(m.spec).obs_noise = PeriodicFunction::constant(0.0);
  EXPECT_FALSE(validate_spec(m.spec, 64).ok());

  DiscreteChainSpec c = std::get<DiscreteChainSpec>(presets::two_state_pm1().spec);
  c.transition(0, 0) = 0.7;
  EXPECT_FALSE(validate_spec(c).ok());
}

TEST(Validation, CheckerboardWarnsAboutZeros) {
  const auto m = presets::checkerboard_chain();
  const auto r = validate_spec(m.spec);
  EXPECT_TRUE(r.ok());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(ModelIo, ParsesAndRoundTrips) {
  const ModelConfig m = parse_model(mathieu_json());
  EXPECT_EQ(m.grid_n, 64u);
  const auto& spec = std::get<TorusDiffusionSpec>(m.spec);
  EXPECT_NEAR(spec.obs_drift(0.0), 1.0, 1e-15);
  const ModelConfig again = parse_model(model_to_json(m));
  EXPECT_EQ(model_to_json(again), model_to_json(m));
}

TEST(ModelIo, UnknownKeyNamesThePath) {
  json j = mathieu_json();
  j["fields"]["drfit"] = 1.0;
  try {
    parse_model(j);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("drfit"), std::string::npos);
  }
}

TEST(ModelIo, BadFunctionType) {
  json j = mathieu_json();
  j["observable"]["drift"] = {{"type", "tan"}};
  EXPECT_THROW(parse_model(j), ConfigError);
  j = mathieu_json();
  j["grid_n"] = 63;
  EXPECT_THROW(parse_model(j), ConfigError);
}

TEST(ModelIo, ChainRoundTrip) {
  const auto m = presets::two_state_pm1();
  const auto back = parse_model(model_to_json(m));
  const auto& c = std::get<DiscreteChainSpec>(back.spec);
  EXPECT_DOUBLE_EQ(c.transition(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(c.transition_increment(0, 1), -1.0);
  EXPECT_TRUE(c.lattice());
}

TEST(Discretize, GeneratorRowsSumToZero) {
  const auto m = presets::gradient_drift(64);
  const auto& spec = std::get<TorusDiffusionSpec>(m.spec);
  const auto g = build_generator(spec, PeriodicGrid(1, 64));
  EXPECT_LT(g.base.rowwise().sum().cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Discretize, GradientDriftInvariantDensity) {
  // V_0 = -sin(2 pi x) = d/dx (cos(2 pi x) / (2 pi)); with D = 1 the density is exp(2 U) = exp(cos(2 pi x) / pi).
  const std::size_t n = 128;
  PeriodicGrid grid(1, n);
  const auto spec = std::get<TorusDiffusionSpec>(presets::gradient_drift(n).spec);
  const auto rho = invariant_density(build_generator(spec, grid), grid);
  Eigen::VectorXd ref(n);
  for (std::size_t i = 0; i < n; ++i) ref[i] = std::exp(std::cos(2 * M_PI * i / double(n)) / M_PI);
  ref /= ref.sum();
  EXPECT_LT((rho.weights - ref).cwiseAbs().maxCoeff() / ref.maxCoeff(), 1e-3);
}

TEST(Discretize, ExpmMatchesClosedForm) {
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -1.0, 0.0;
  const Eigen::MatrixXd e = expm(Eigen::MatrixXd(a * 0.7));
  EXPECT_NEAR(e(0, 0), std::cos(0.7), 1e-14);
  EXPECT_NEAR(e(0, 1), std::sin(0.7), 1e-14);
}

TEST(Discretize, SemigroupRefusesOverflow) {
  const auto spec = std::get<TorusDiffusionSpec>(presets::gaussian_baseline(16).spec);
  const auto g = build_tilted_generator(spec, PeriodicGrid(1, 16), 10.0);
  EXPECT_THROW(semigroup_step(g, 100.0), RangeError);
}
