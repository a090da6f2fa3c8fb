#include "rdpca/cli.hpp"
#include "rdpca/config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rdpca {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir_;
  void SetUp() override {
    const char* env = std::getenv("RDPCA_TEST_TMP");
    dir_ = fs::path(env ? env : fs::temp_directory_path().string()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("ROBUST_DPCA_OUT");
  }
  void TearDown() override { unsetenv("ROBUST_DPCA_OUT"); }
  fs::path write(const std::string& name, const std::string& body) {
    std::ofstream(dir_ / name, std::ios::binary) << body;
    return dir_ / name;
  }
  std::string out_dir(const std::string& sub) const { return (dir_ / sub).string(); }
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  const Invocation no_cfg = run({"experiment", "tail-sweep"});
  EXPECT_EQ(no_cfg.code, kExitUsage);
  EXPECT_NE(no_cfg.err.find("--config"), std::string::npos);
  EXPECT_EQ(run({"experiment", "tail-sweep", "--config", (dir_ / "missing.json").string()}).code, kExitUsage);
  EXPECT_EQ(run({"experiment", "no-such-scenario", "--scale", "desk"}).code, kExitUsage);
  EXPECT_EQ(run({"experiment", "tail-sweep", "--scale", "huge"}).code, kExitUsage);
  EXPECT_EQ(run({"estimate", "--estimator", "magic"}).code, kExitUsage);
  EXPECT_EQ(run({"--isa", "neon", "estimate"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
  EXPECT_EQ(run({"--version"}).code, kExitOk);
}

TEST_F(Cli, EstimateFromFileWritesCovariance) {
  const auto data = write("data.csv", "a,b,c\n1,0,0\n0,2,0\n0,0,3\n-1,0,0\n0,-2,1\n");
  const Invocation r = run({"estimate", "--input", data.string(), "--estimator", "sample", "--out-dir", out_dir("o")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.err.find("header"), std::string::npos);
  std::ifstream in(dir_ / "o" / "covariance.csv");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, "0.4,0,0");
}

TEST_F(Cli, RuntimeFailureExitCode) {
  const auto ragged = write("ragged.csv", "1,2,3\n4,5\n");
  EXPECT_EQ(run({"estimate", "--input", ragged.string(), "--out-dir", out_dir("o")}).code, kExitRuntime);
  EXPECT_EQ(run({"estimate", "--input", (dir_ / "absent.csv").string()}).code, kExitRuntime);
}

TEST_F(Cli, EnvironmentOverridesOutDir) {
  setenv("ROBUST_DPCA_OUT", out_dir("env").c_str(), 1);
  const Invocation r = run({"estimate", "--d", "6", "--n", "200", "--lambda", "16", "--out-dir", out_dir("flag")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "env" / "covariance.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "flag"));
  EXPECT_NE(r.out.find("subspace error"), std::string::npos);
}

TEST_F(Cli, DpcaFlagsAndConfig) {
  Invocation r = run({"dpca", "--d", "10", "--n", "150", "--m", "4", "--lambda", "16", "--k", "2", "--out-dir",
               out_dir("a")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("transmitted 80 values"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "v_tilde.csv"));

  const auto cfg = write("dpca.json", R"({"d": 10, "m": 3, "n": 150, "lambda": 16, "k": 2,
                                          "estimator": {"kind": "shrinkage"}})");
  r = run({"dpca", "--config", cfg.string(), "--out-dir", out_dir("b")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("estimator shrinkage"), std::string::npos);
  EXPECT_EQ(run({"dpca", "--config", (dir_ / "none.json").string()}).code, kExitUsage);
}

TEST_F(Cli, ExperimentIsReproducible) {
  const auto cfg = write("tiny.json", R"({
    "seed": 3, "reps": 2, "k": 2,
    "grid": {"base": {"d": 12, "m": 3, "n": 100, "lambda": 20}, "panels": [{"n": [100, 200]}]}
  })");
  const std::vector<std::string> base = {"experiment", "tail-sweep", "--config", cfg.string(), "--quiet"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out-dir", out_dir("a")});
  b.insert(b.end(), {"--out-dir", out_dir("b"), "--jobs", "2"});
  const Invocation ra = run(a);
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  ASSERT_EQ(run(b).code, kExitOk);
  for (const char* f : {"tail-sweep.csv", "tail-sweep.plotdata", "tail-sweep.summary.txt"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(read_text_file(dir_ / "a" / f), read_text_file(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(ra.out.find("slope n"), std::string::npos);
  // 2 points x 2 reps x 3 estimators plus the header.
  const std::string csv = read_text_file(dir_ / "a" / "tail-sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 13);

  const Invocation other_seed = run({"experiment", "tail-sweep", "--config", cfg.string(), "--quiet", "--seed", "4",
                              "--out-dir", out_dir("c")});
  ASSERT_EQ(other_seed.code, kExitOk);
  EXPECT_NE(read_text_file(dir_ / "c" / "tail-sweep.csv"), csv);
}

TEST_F(Cli, ExperimentConfigErrorsAreUsageErrors) {
  const auto bad = write("bad.json", R"({"reps": 2, "colour": "blue"})");
  EXPECT_EQ(run({"experiment", "tail-sweep", "--config", bad.string(), "--quiet"}).code, kExitUsage);
  const auto wrong = write("wrong.json", R"({"scenario": "outlier-sweep"})");
  EXPECT_EQ(run({"experiment", "tail-sweep", "--config", wrong.string(), "--quiet"}).code, kExitUsage);
  EXPECT_EQ(run({"experiment", "outlier-sweep", "--scale", "desk", "--model", "laplace"}).code, kExitUsage);
}

TEST_F(Cli, SteinSubcommand) {
  const auto cfg = write("stein.json", R"({"reps": 1, "grid": {"product": {"nu": [3, 4]}, "base": {"d": 6, "m": 2, "n": 200}}})");
  const Invocation r = run({"stein", "--config", cfg.string(), "--link", "square", "--quiet", "--out-dir", out_dir("s")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const std::string csv = read_text_file(dir_ / "s" / "stein-sweep.csv");
  EXPECT_NE(csv.find("stein-sweep,RDP,6,2,200,1,4,3,"), std::string::npos) << csv;
}

}  // namespace
}  // namespace rdpca
