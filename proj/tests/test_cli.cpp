#include <filesystem>
#include <fstream>
#include <sstream>
#include <gtest/gtest.h>

#include "ommap/cli.hpp"

using namespace ommap;
using namespace ommap::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ommap_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig simulate_config(const fs::path& dir) {
  RunConfig c;
  c.command = "simulate";
  c.output_dir = dir.string();
  c.seed = 5;
  c.horizon = 2.0;
  c.dt = 0.01;
  c.n_obs = 3;
  c.resolve();
  return c;
}

}  // namespace

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.command = "map";
  c.variant = "bridge";
  c.u_plus = 1.0;
  c.gammas = {0.5, 0.25};
  c.j_values = {2, 4};
  c.criteria = {1, 3};
  c.resolve();
  const auto back = from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(*back.u_plus, 1.0);
  EXPECT_EQ(back.n_starts, 8u);
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(RunConfig, HashIgnoresOutputDir) {
  RunConfig a, b;
  a.command = b.command = "simulate";
  b.output_dir = "elsewhere";
  a.resolve();
  b.resolve();
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(RunConfig, Defaults) {
  RunConfig c;
  c.command = "consistency-noise";
  c.resolve();
  EXPECT_EQ(c.n_obs, 5u);
  EXPECT_EQ(c.gammas, (std::vector<double>{1.0, 0.5, 0.25, 0.125, 0.0625}));
  RunConfig s;
  s.command = "smallball";
  s.resolve();
  EXPECT_EQ(s.z1, (std::vector<double>{1.0}));
  EXPECT_EQ(s.z2, (std::vector<double>{0.0}));
}

TEST(RunConfig, ValidationRejectsBadValues) {
  auto bad = [](auto mutate) {
    RunConfig c;
    c.command = "map";
    c.resolve();
    mutate(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](RunConfig& c) { c.command = "fly"; });
  bad([](RunConfig& c) { c.format = "xml"; });
  bad([](RunConfig& c) { c.sigma = 0.0; });
  bad([](RunConfig& c) { c.dt = 0.03; });
  bad([](RunConfig& c) { c.drift = "triple-well"; });
  bad([](RunConfig& c) { c.variant = "bridge"; });
  bad([](RunConfig& c) { c.metric = "max"; });
  bad([](RunConfig& c) {
    c.command = "check";
    c.criteria = {10};
  });
}

TEST(Run, ConfigErrorExitsTwoAndWritesErrorJson) {
  const auto dir = fresh_dir("config_error");
  RunConfig c = simulate_config(dir);
  c.sigma = -1.0;
  std::ostringstream log, err;
  EXPECT_EQ(run_guarded(c, log, err), 2);
  EXPECT_NE(err.str().find("\"error\":\"config\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "error.json"));
}

TEST(Run, NoiseFreeZeroDriftSimulationIsConstant) {
  const auto dir = fresh_dir("constant");
  RunConfig c = simulate_config(dir);
  c.drift = "zero";
  c.sigma = 0.0;
  c.u_minus = 3.0;
  std::ostringstream log;
  ASSERT_EQ(run(c, log), 0);
  std::ifstream in(dir / "truth.csv");
  const auto path = read_grid_csv(in);
  EXPECT_EQ(path.size(), 201u);
  for (double v : path.values()) EXPECT_EQ(v, 3.0);
  EXPECT_TRUE(fs::exists(dir / "observations.csv"));
  EXPECT_TRUE(fs::exists(dir / "observations.json"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Run, ManifestReplayIsByteIdentical) {
  const auto first = fresh_dir("replay_first");
  const auto second = fresh_dir("replay_second");
  std::ostringstream log;
  ASSERT_EQ(run(simulate_config(first), log), 0);
  RunConfig replay = read_manifest(first / "manifest.json");
  replay.output_dir = second.string();
  ASSERT_EQ(run(replay, log), 0);
  for (const char* f : {"truth.csv", "observations.csv", "observations.json"})
    EXPECT_EQ(slurp(first / f), slurp(second / f)) << f;
}

TEST(Run, SimulationMatchesLibraryTruth) {
  const auto dir = fresh_dir("truth");
  const RunConfig c = simulate_config(dir);
  std::ostringstream log;
  ASSERT_EQ(run(c, log), 0);
  std::ifstream in(dir / "truth.csv");
  EXPECT_EQ(sup_distance(read_grid_csv(in), simulate_truth(c)), 0.0);
}

TEST(Commands, Names) {
  const auto names = command_names();
  EXPECT_EQ(names.size(), 6u);
  EXPECT_EQ(names.front(), "simulate");
}
