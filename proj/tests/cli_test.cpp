#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ldpx/errors.hpp"
#include "run_config.hpp"

using namespace ldpx;
using namespace ldpx::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ldpx_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_config(const json& j, const std::string& name = "run.json") {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

  int run_cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  std::vector<std::string> read_lines(const std::string& name) const {
    std::ifstream in(dir_ / "out" / name);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    return lines;
  }

  std::string out_dir() const { return (dir_ / "out").string(); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  return cells;
}

}  // namespace

TEST(RunConfig, MinimalConfigGetsDefaults) {
  const auto c = parse_config(json{{"model", "preset:gaussian"}});
  EXPECT_EQ(c.grid_n, 256u);
  EXPECT_EQ(c.theta_max, 8.0);
  EXPECT_EQ(c.tol, 1e-6);
  EXPECT_EQ(c.seed, 1u);
}

TEST(RunConfig, NegativeGridNamesTheKey) {
  try {
    parse_config(json{{"model", "preset:gaussian"}, {"grid_n", -4}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("grid_n"), std::string::npos);
  }
}

TEST(RunConfig, StrictKeys) {
  EXPECT_THROW(parse_config(json{{"model", "preset:gaussian"}, {"sed", 3}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"model", "preset:gaussian"}, {"rate", {{"a_mni", 0.1}}}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"model", "preset:gaussian"}, {"tol", -1.0}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"model", "preset:nope"}}), ConfigError);
  EXPECT_THROW(parse_config(json{{"model", "missing.json"}}), ConfigError);
  EXPECT_THROW(parse_config(json::object()), ConfigError);
}

TEST(RunConfig, EmitThenParseIsIdentity) {
  json j{{"model", "preset:mathieu"}, {"grid_n", 128}, {"seed", 5}, {"expand", {{"a", 0.3}, {"svg", true}}}};
  const auto c = parse_config(j);
  const auto emitted = emit_config(c);
  const auto back = parse_config(emitted);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(emit_config(back).dump(), emitted.dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST_F(CliTest, UnknownCommandIsUsageError) {
  EXPECT_EQ(run_cli({"frobnicate"}), 1);
  EXPECT_NE(err_.str().find("unknown command"), std::string::npos);
  EXPECT_EQ(run_cli({}), 1);
  EXPECT_EQ(run_cli({"rate"}), 1);  // --config is required
}

TEST_F(CliTest, RateOnGaussianHasHalfAtOne) {
  const auto cfg = write_config({{"model", "preset:gaussian"}, {"grid_n", 32}});
  ASSERT_EQ(run_cli({"rate", "--config", cfg, "--output-dir", out_dir(), "--a-min", "0.5", "--a-max", "2",
                     "--a-steps", "4"}),
            0)
      << err_.str();
  const auto lines = read_lines("rate.csv");
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[1].rfind("# config_hash ", 0), 0u);
  EXPECT_EQ(lines[2].substr(0, 17), "a,theta_a,I,Iseco");
  const auto row = split(lines[4]);  // a = 1
  EXPECT_DOUBLE_EQ(std::stod(row[0]), 1.0);
  EXPECT_NEAR(std::stod(row[2]), 0.5, 1e-8);
}

TEST_F(CliTest, OutputsAreDeterministicApartFromTimestamp) {
  const auto cfg = write_config({{"model", "preset:mathieu"}, {"grid_n", 32}});
  ASSERT_EQ(run_cli({"spectral", "--config", cfg, "--output-dir", out_dir(), "--threads", "1"}), 0);
  const auto first = read_lines("spectral.csv");
  ASSERT_EQ(run_cli({"spectral", "--config", cfg, "--output-dir", out_dir(), "--threads", "3"}), 0);
  const auto second = read_lines("spectral.csv");
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 1; i < first.size(); ++i) EXPECT_EQ(first[i], second[i]);
}

TEST_F(CliTest, ExpandGaussianFitSummary) {
  const auto cfg = write_config({{"model", "preset:gaussian"},
                                 {"grid_n", 32},
                                 {"verify", {{"s_grid", {0.5, 5.0}}, {"t_grid", {1.0, 2.0}}}}});
  ASSERT_EQ(run_cli({"expand", "--config", cfg, "--output-dir", out_dir(), "--a", "1", "--t-min", "16", "--t-max",
                     "256", "--t-steps", "9", "--order", "6", "--svg"}),
            0)
      << err_.str();
  double d0 = 0.0;
  for (const auto& l : read_lines("expand_fit.csv")) {
    const auto c = split(l);
    if (c.size() == 2 && c[0] == "D0") d0 = std::stod(c[1]);
  }
  EXPECT_NEAR(d0, 0.398942, 0.004);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "expand.svg"));
  EXPECT_EQ(read_lines("expand.csv").size(), 3u + 9u);
}

TEST_F(CliTest, ExpandRefusesWhenConditionsFail) {
  // The +-1 walk is a lattice observable: no decay away from the real axis.
  const auto cfg = write_config({{"model", "preset:two_state"}, {"verify", {{"t_grid", {1.0, 2.0}}}}});
  EXPECT_EQ(run_cli({"expand", "--config", cfg, "--output-dir", out_dir(), "--a", "0.5"}), 2);
  EXPECT_NE(err_.str().find("--force"), std::string::npos);
}

TEST_F(CliTest, VerifyConditionsExitCodes) {
  const auto bad = write_config({{"model", "preset:checkerboard"}, {"verify", {{"theta_grid", {0.5}}}}}, "bad.json");
  EXPECT_EQ(run_cli({"verify-conditions", "--config", bad, "--output-dir", out_dir()}), 2);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
  const auto good = write_config({{"model", "preset:gaussian"}, {"grid_n", 32}, {"verify", {{"theta_grid", {1.0}}}}});
  EXPECT_EQ(run_cli({"verify-conditions", "--config", good, "--output-dir", out_dir()}), 0) << out_.str();
  EXPECT_GT(read_lines("conditions.csv").size(), 3u);
}

TEST_F(CliTest, EmitConfigRoundTrips) {
  const auto cfg = write_config({{"model", "preset:two_state"}, {"seed", 11}});
  ASSERT_EQ(run_cli({"emit-config", "--config", cfg}), 0);
  const auto emitted = json::parse(out_.str());
  const auto again = write_config(emitted, "again.json");
  ASSERT_EQ(run_cli({"emit-config", "--config", again}), 0);
  EXPECT_EQ(json::parse(out_.str()), emitted);
}

TEST_F(CliTest, SimulateWritesOneRow) {
  const auto cfg = write_config({{"model", "preset:gaussian"}, {"grid_n", 32}});
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--output-dir", out_dir(), "--a", "1", "--t", "4", "--dt", "0.01",
                     "--paths", "500", "--method", "tilted"}),
            0)
      << err_.str();
  const auto lines = read_lines("simulate.csv");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_NE(lines[2].find("p_hat"), std::string::npos);
  EXPECT_EQ(run_cli({"simulate", "--config", cfg, "--output-dir", out_dir(), "--method", "magic"}), 1);
}

TEST_F(CliTest, SimulateRejectsChains) {
  const auto cfg = write_config({{"model", "preset:two_state"}});
  EXPECT_EQ(run_cli({"simulate", "--config", cfg, "--output-dir", out_dir()}), 1);
}

TEST_F(CliTest, InvalidModelFileIsReported) {
  std::ofstream(dir_ / "model.json") << R"({"kind": "torus_diffusion", "fields": {"dim": 1}})";
  const auto cfg = write_config({{"model", "model.json"}});
  EXPECT_EQ(run_cli({"validate", "--config", cfg, "--output-dir", out_dir()}), 1);
  EXPECT_FALSE(err_.str().empty());
}
