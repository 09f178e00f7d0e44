#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowlab/errors.hpp"
#include "flowlab/experiment.hpp"

using namespace flowlab;
namespace fs = std::filesystem;

namespace {

const char* kImcf = R"(
[experiment]
kind = imcf
seed = 5
output_dir = OUT

[model]
label = robertson_walker
n = 2
p = 4

[grid]
N = 32
L = 1

[flow]
mode = imcf
t_max = 1

[initial]
u0 = -2
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

std::string config_error(const std::string& text) {
  try {
    validate(parse_config(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

class Workspace : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("flowlab_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  fs::path write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }
  int cli(const std::string& args) const {
    const int rc = std::system((std::string(FLOWLAB_CLI) + " " + args + " > " + (dir_ / "log").string() + " 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  fs::path dir_;
};

}  // namespace

TEST(Config, ParsesSectionedKeys) {
  const ExperimentConfig c = parse_config(kImcf);
  EXPECT_EQ(c.kind, ExperimentKind::Imcf);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.model.label, "robertson_walker");
  EXPECT_EQ(c.model.p, 4.0);
  EXPECT_EQ(c.grid.N, 32);
  EXPECT_EQ(c.model.period, 1.0);  // the torus period follows grid.L
  EXPECT_EQ(c.mode, FlowMode::IMCF);
  EXPECT_EQ(c.initial.u0, -2.0);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error(replace(kImcf, "N = 32", "")).find("grid.N"), std::string::npos);
  EXPECT_NE(config_error(replace(kImcf, "N = 32", "N = 48")).find("grid.N"), std::string::npos);
  EXPECT_NE(config_error(replace(kImcf, "N = 32", "N = many")).find("grid.N"), std::string::npos);
  EXPECT_NE(config_error(replace(kImcf, "t_max = 1", "t_max = 1\nspeed = 3")).find("flow.speed"), std::string::npos);
  EXPECT_NE(config_error(replace(kImcf, "kind = imcf", "kind = everything")).find("experiment.kind"), std::string::npos);
  EXPECT_NE(config_error(replace(kImcf, "t_max = 1", "t_max = -1")).find("flow.t_max"), std::string::npos);
  EXPECT_NE(config_error(replace(kImcf, "label = robertson_walker", "")).find("model.label"), std::string::npos);
}

TEST(Config, HashIgnoresOutputLocationOnly) {
  const std::uint64_t h = config_hash(parse_config(kImcf));
  EXPECT_EQ(h, config_hash(parse_config(replace(kImcf, "OUT", "elsewhere"))));
  EXPECT_NE(h, config_hash(parse_config(replace(kImcf, "seed = 5", "seed = 6"))));
  EXPECT_NE(h, config_hash(parse_config(replace(kImcf, "u0 = -2", "u0 = -2.5"))));
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Config, CsvRoundTripKeepsSeventeenDigits) {
  const fs::path p = fs::path(::testing::TempDir()) / "flowlab_roundtrip.csv";
  Table t;
  t.columns = {"t", "x"};
  t.rows = {{0.1, 1.0 / 3.0}, {2.0, -1e-300}};
  write_csv(p.string(), t);
  const Table r = read_csv(p.string());
  EXPECT_EQ(r.columns, t.columns);
  EXPECT_EQ(r.rows, t.rows);
}

TEST_F(Workspace, MissingGridSizeExitsWithTwo) {
  std::stringstream out, err;
  const fs::path p = write("bad.ini", replace(kImcf, "N = 32", ""));
  EXPECT_EQ(run_experiment(p.string(), out, err), kExitConfig);
  EXPECT_NE(err.str().find("grid.N"), std::string::npos);
  EXPECT_EQ(cli("run " + p.string()), kExitConfig);
  EXPECT_NE(slurp(dir_ / "log").find("grid.N"), std::string::npos);
}

TEST_F(Workspace, RunWritesReproducibleArtifacts) {
  const std::string out = (dir_ / "out").string();
  const fs::path cfg = write("imcf.ini", replace(kImcf, "OUT", out));
  ASSERT_EQ(cli("run " + cfg.string()), kExitOk);
  const std::string first = slurp(fs::path(out) / "run.csv");
  ASSERT_EQ(cli("run " + cfg.string()), kExitOk);
  EXPECT_EQ(first, slurp(fs::path(out) / "run.csv"));

  const auto summary = nlohmann::json::parse(slurp(fs::path(out) / "summary.json"));
  const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  EXPECT_EQ(summary["config_hash"], hex64(config_hash(parse_config(kImcf))));
  EXPECT_EQ(manifest["config_hash"], summary["config_hash"]);
  EXPECT_EQ(manifest["seed"], 5);
  EXPECT_FALSE(manifest["code_version"].get<std::string>().empty());
  EXPECT_NEAR(summary["volume_decay_slope"].get<double>(), -1.0, 1e-6);
  EXPECT_EQ(first.substr(0, first.find('\n')).find("t,"), 5u);  // "step,t,..."
}

TEST_F(Workspace, EnvironmentOverridesOutputDir) {
  const fs::path cfg = write("imcf.ini", replace(kImcf, "OUT", (dir_ / "ignored").string()));
  const std::string env = (dir_ / "env").string();
  ASSERT_EQ(setenv("FLOWLAB_OUTPUT", env.c_str(), 1), 0);
  std::stringstream out, err;
  EXPECT_EQ(run_experiment(cfg.string(), out, err), kExitOk);
  unsetenv("FLOWLAB_OUTPUT");
  EXPECT_TRUE(fs::exists(fs::path(env) / "summary.json"));
  EXPECT_FALSE(fs::exists(dir_ / "ignored"));
}

TEST_F(Workspace, PlotTablesCarryHeadersAndPredictions) {
  const std::string out = (dir_ / "out").string();
  ASSERT_EQ(cli("run " + write("imcf.ini", replace(kImcf, "OUT", out)).string()), kExitOk);
  ASSERT_EQ(cli("plot " + out), kExitOk);
  std::ifstream f(fs::path(out) / "plot" / "volume.dat");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line[0], '#');
  std::getline(f, line);
  EXPECT_EQ(line, "# t volume volume_prediction");
  double t, v, pred;
  f >> t >> v >> pred;
  EXPECT_EQ(t, 0.0);
  EXPECT_EQ(v, pred);
  const std::string again = slurp(fs::path(out) / "plot" / "volume.dat");
  ASSERT_EQ(cli("plot " + out), kExitOk);
  EXPECT_EQ(again, slurp(fs::path(out) / "plot" / "volume.dat"));
  EXPECT_TRUE(fs::exists(fs::path(out) / "plot" / "c2_norm.dat"));
}

TEST_F(Workspace, PlotWithoutArtifactsFails) {
  EXPECT_EQ(cli("plot " + (dir_ / "nothing").string()), kExitFailure);
}

TEST_F(Workspace, SuiteRunsEveryConfig) {
  fs::create_directories(dir_ / "suite");
  for (int k = 0; k < 3; ++k)
    write("suite/c" + std::to_string(k) + ".ini",
          replace(replace(kImcf, "OUT", (dir_ / ("o" + std::to_string(k))).string()), "seed = 5",
                  "seed = " + std::to_string(k)));
  EXPECT_EQ(cli("suite " + (dir_ / "suite").string() + " --jobs 2"), kExitOk);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(dir_ / ("o" + std::to_string(k)) / "manifest.json"));
  write("suite/broken.ini", "[experiment]\nkind = imcf\n");
  EXPECT_EQ(cli("suite " + (dir_ / "suite").string()), kExitConfig);
}

TEST_F(Workspace, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli(""), kExitConfig);
  EXPECT_EQ(cli("launch x"), kExitConfig);
}
