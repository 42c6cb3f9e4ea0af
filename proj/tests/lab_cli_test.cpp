#include "kplab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace kplab {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "kplab_lab_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "kplab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli_main(int(argv.size()), argv.data(), out, err);
}

Json manifest(const fs::path& dir) { return Json::parse(slurp(dir / "manifest.json")); }

std::vector<std::string> violations(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigViolations& e) {
    return e.items();
  }
  return {};
}

bool mentions(const std::vector<std::string>& items, const std::string& needle) {
  for (const auto& i : items)
    if (i.find(needle) != std::string::npos) return true;
  return false;
}

TEST(ParseConfig, MinimalHumRoundTrips) {
  const auto c = parse_config(std::string_view(R"({"experiment": "hum"})"));
  EXPECT_EQ(c.experiment, Experiment::hum);
  EXPECT_EQ(parse_config(serialize(c)), c);
  EXPECT_EQ(serialize(parse_config(serialize(c))).dump(), serialize(c).dump());
}

TEST(ParseConfig, SampleConfigsRoundTrip) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(KPLAB_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    const auto c = parse_config(std::string_view(slurp(entry.path())));
    EXPECT_EQ(parse_config(serialize(c)), c) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 7);
}

TEST(ParseConfig, StripOrderNamesBothFields) {
  const auto v = violations(R"({"experiment": "hum", "strip": {"a": 1.0, "b": 0.5}})");
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("strip.a"), std::string::npos);
  EXPECT_NE(v[0].find("strip.b"), std::string::npos);
}

TEST(ParseConfig, CounterexampleRequiresHorizontal) {
  const auto v = violations(
      R"({"experiment": "counterexample", "strip": {"a": 1.0, "b": 3.0, "orientation": "vertical"}})");
  EXPECT_TRUE(mentions(v, "counterexample requires horizontal orientation"));
  EXPECT_NO_THROW(parse_config(std::string_view(R"({"experiment": "counterexample"})")));
  EXPECT_TRUE(mentions(violations(R"({"experiment": "hum", "strip": {"orientation": "horizontal"}})"),
                       "requires vertical"));
}

TEST(ParseConfig, ReportsEveryViolation) {
  const auto v = violations(R"({
    "experiment": "hum", "grid": {"K": 0, "L": -1, "M": 3}, "T": -1,
    "solver": {"dealias": 2}, "colour": "red", "seed": -4})");
  for (const char* path : {"grid.K", "grid.L", "grid.M", "T:", "solver.dealias", "colour", "seed"})
    EXPECT_TRUE(mentions(v, path)) << path;
  EXPECT_EQ(v.size(), 7u);
}

TEST(ParseConfig, UnknownExperimentListsValidNames) {
  const auto v = violations(R"({"experiment": "kdv"})");
  ASSERT_EQ(v.size(), 1u);
  for (auto n : kExperimentNames) EXPECT_NE(v[0].find(std::string(n)), std::string::npos);
}

TEST(ParseConfig, SweepKeysBelongToTheExperiment) {
  EXPECT_TRUE(mentions(violations(R"({"experiment": "hum", "sweep": {"n_list": [4]}})"), "sweep.n_list"));
  EXPECT_TRUE(mentions(violations(R"({"experiment": "scan-lambda"})"), "sweep"));
  EXPECT_TRUE(mentions(violations(R"({"experiment": "ingham", "sweep": {"freqs": [1, 2, 1]}})"),
                       "duplicate"));
  EXPECT_TRUE(mentions(
      violations(R"({"experiment": "counterexample", "sweep": {"B": 0.3, "b_small": 0.4}})"), "b_small"));
}

TEST(ParseConfig, MalformedJson) {
  EXPECT_THROW(parse_config(std::string_view("{\"experiment\": ")), ConfigError);
  EXPECT_THROW(parse_config(std::string_view("[1, 2]")), ConfigViolations);
}

TEST(Csv, NumbersReadBackExactly) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456789.125})
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Run, SelftestExitsZero) {
  const auto dir = scratch("selftest");
  ExperimentConfig c;
  c.output_dir = dir.string();
  const auto r = run_experiment(c);
  EXPECT_EQ(r.exit_code, 0);
  const auto m = manifest(dir);
  EXPECT_EQ(m["metrics"]["failed"], 0);
  EXPECT_EQ(m["outputs"][0], "selftest.csv");
}

TEST(Run, HumExitsZeroWithSmallResidual) {
  const auto dir = scratch("hum");
  const auto cfg = write_config(dir, R"({"experiment": "hum", "grid": {"K": 8, "L": 4}, "T": 1.0})");
  EXPECT_EQ(run_cli({"hum", "--config", cfg.string(), "--output", (dir / "out").string()}), 0);
  const auto m = manifest(dir / "out");
  EXPECT_EQ(m["status"], "ok");
  EXPECT_LE(m["metrics"]["residual_max"].get<double>(), 1e-6);
  EXPECT_GT(m["metrics"]["min_eigs"][0].get<double>(), 0.0);
  EXPECT_EQ(m["config"]["grid"]["K"], 8);
  EXPECT_EQ(m["kplab_version"], version());
  for (const auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(dir / "out" / f.get<std::string>()));
}

TEST(Run, LargeDataSteerExitsTwo) {
  const auto dir = scratch("diverge");
  const auto cfg = write_config(dir, R"({"experiment": "nonlinear-steer", "solver": {"R": 100.0}})");
  EXPECT_EQ(run_cli({"nonlinear-steer", "--config", cfg.string(), "--output", (dir / "out").string()}), 2);
  const auto m = manifest(dir / "out");
  EXPECT_EQ(m["status"], "numerical_error");
  EXPECT_NE(m["errors"][0].get<std::string>().find("outside contraction regime"), std::string::npos);
  EXPECT_FALSE(m["metrics"]["picard_history"].empty());
}

TEST(Run, UnobservableTruncationExitsTwo) {
  const auto dir = scratch("unobservable");
  ExperimentConfig c;
  c.experiment = Experiment::hum;
  c.T = 0.05;
  c.strip.a = 0.0;
  c.strip.b = 0.005;
  c.output_dir = dir.string();
  const auto r = run_experiment(c);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.manifest["errors"][0].get<std::string>().find("unobservable"), std::string::npos);
  EXPECT_EQ(manifest(dir)["status"], "numerical_error");
}

TEST(Cli, ConfigErrorsExitOneAndReachTheManifest) {
  const auto dir = scratch("bad");
  const auto cfg = write_config(dir, R"({"experiment": "hum", "grid": {"K": -2}, "extra": 1})");
  EXPECT_EQ(run_cli({"hum", "--config", cfg.string(), "--output", (dir / "out").string()}), 1);
  const auto m = manifest(dir / "out");
  EXPECT_EQ(m["status"], "config_error");
  EXPECT_EQ(m["errors"].size(), 2u);
  EXPECT_EQ(run_cli({"hum", "--config", (dir / "missing.json").string()}), 1);
  EXPECT_EQ(run_cli({"transit", "--config", cfg.string()}), 1);
  EXPECT_EQ(run_cli({"kdv", "--config", cfg.string()}), 1);
  EXPECT_EQ(run_cli({"hum"}), 1);
}

TEST(Cli, OutputPrecedence) {
  const auto dir = scratch("precedence");
  const auto cfg = write_config(
      dir, R"({"experiment": "transit", "sweep": {"lambdas": [0, 1]}, "output_dir": ")" +
               (dir / "from_config").string() + R"("})");
  EXPECT_EQ(run_cli({"transit", "--config", cfg.string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "from_config" / "manifest.json"));
  ::setenv("KPLAB_OUTPUT", (dir / "from_env").string().c_str(), 1);
  EXPECT_EQ(run_cli({"transit", "--config", cfg.string()}), 0);
  EXPECT_EQ(run_cli({"transit", "--config", cfg.string(), "--output", (dir / "from_flag").string()}), 0);
  ::unsetenv("KPLAB_OUTPUT");
  EXPECT_TRUE(fs::exists(dir / "from_env" / "transit.csv"));
  EXPECT_TRUE(fs::exists(dir / "from_flag" / "transit.csv"));
  EXPECT_EQ(manifest(dir / "from_env")["config"]["output_dir"], (dir / "from_env").string());
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto dir = scratch("seed");
  const auto cfg = write_config(dir, R"({"experiment": "hum", "grid": {"K": 3, "L": 1}, "seed": 5})");
  for (const char* s : {"5", "6"})
    EXPECT_EQ(run_cli({"hum", "--config", cfg.string(), "--output", (dir / s).string(), "--seed", s}), 0);
  EXPECT_EQ(run_cli({"hum", "--config", cfg.string(), "--output", (dir / "c").string()}), 0);
  EXPECT_EQ(slurp(dir / "5" / "hum.csv"), slurp(dir / "c" / "hum.csv"));
  EXPECT_NE(slurp(dir / "5" / "hum.csv"), slurp(dir / "6" / "hum.csv"));
  EXPECT_EQ(manifest(dir / "6")["seed"], 6);
}

TEST(Cli, CsvBytesDoNotDependOnThreads) {
  const auto dir = scratch("threads");
  const std::vector<std::pair<std::string, std::string>> runs{
      {"hum", R"({"experiment": "hum", "grid": {"K": 4, "L": 3}, "sweep": {"pairs": 2}, "seed": 3})"},
      {"scan-lambda", R"({"experiment": "scan-lambda", "grid": {"K": 4, "L": 0}, "T": 2,
          "sweep": {"lambda_range": {"start": 0, "stop": 5, "step": 0.5}, "resonant_kmax": 3}})"},
      {"counterexample", R"({"experiment": "counterexample", "sweep": {"n_list": [4, 8, 16], "B": 0.45}})"},
      {"selftest", R"({"experiment": "selftest"})"}};
  for (const auto& [name, text] : runs) {
    const auto cfg = write_config(dir, text);
    for (const char* t : {"1", "3"})
      ASSERT_EQ(run_cli({name, "--config", cfg.string(), "--output", (dir / (name + t)).string(),
                         "--threads", t}),
                0);
    const auto m1 = manifest(dir / (name + "1")), m3 = manifest(dir / (name + "3"));
    EXPECT_EQ(m3["threads"], 3);
    ASSERT_EQ(m1["outputs"], m3["outputs"]);
    for (const auto& f : m1["outputs"]) {
      const auto a = slurp(dir / (name + "1") / f.get<std::string>());
      EXPECT_FALSE(a.empty());
      EXPECT_EQ(a, slurp(dir / (name + "3") / f.get<std::string>())) << name << " " << f;
    }
  }
  set_default_threads(1);
}

}  // namespace
}  // namespace kplab
