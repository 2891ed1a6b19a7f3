#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI binary with stderr folded into the captured output.
Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" PSILCF_CLI_BINARY "\" " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("psilcf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& content) {
    std::ofstream(dir_ / name) << content;
    return dir_ / name;
  }
  std::string out(const std::string& sub) const { return "--output-dir \"" + (dir_ / sub).string() + "\""; }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, PowerFunctionIsSqrtLcf) {
  const auto r = run("check-psi-lcf --g \"x^-3\" --psi \"sqrt(x)\" " + out("a"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "psi_lcf.csv"));
}

TEST_F(CliTest, ExponentialFailsSqrtLcf) {
  const auto r = run("check-psi-lcf --g \"exp(-x)\" --psi \"sqrt(x)\" " + out("a"));
  EXPECT_EQ(r.code, 1) << r.out;
}

TEST_F(CliTest, GammaOfConstantPsi) {
  const auto r = run("gamma --psi \"1\" --x 5 " + out("g"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "4\n");
}

TEST_F(CliTest, ThetaAndInverse) {
  auto r = run("theta --psi \"sqrt(x)\" --x 16 " + out("t"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "4\n");
  r = run("theta --psi \"sqrt(x)\" --x 4 --inverse " + out("t"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out), 16.0, 1e-8);
}

TEST_F(CliTest, ManifestEchoesConfig) {
  const auto cfg = write("c.json", R"({"command": "gamma", "psi": "x", "x": [1, 2.718281828459045]})");
  const auto r = run("gamma --config \"" + cfg.string() + "\" " + out("m"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto m = nlohmann::json::parse(slurp(dir_ / "m" / "manifest.json"));
  EXPECT_EQ(m["config"]["psi"], "x");
  EXPECT_EQ(m["command"], "gamma");
  EXPECT_TRUE(m.contains("version"));
}

TEST_F(CliTest, FlagsOverrideConfig) {
  const auto cfg = write("c.json", R"({"psi": "x", "x": [5]})");
  const auto r = run("gamma --config \"" + cfg.string() + "\" --psi 1 " + out("o"));
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "4\n");
}

TEST_F(CliTest, OutputDirFromEnvironment) {
  const auto r = run("gamma --psi 1 --x 2", "PSILCF_OUTPUT_DIR=\"" + (dir_ / "env").string() + "\"");
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "manifest.json"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("gamma --bogus 1 " + out("u")).code, 2);
  const auto bad = write("bad.json", R"({"psi": "1", "unknown_key": 3})");
  const auto r = run("gamma --config \"" + bad.string() + "\" " + out("u"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("unknown_key"), std::string::npos);
  EXPECT_EQ(run("gamma --psi \"x+\" " + out("u")).code, 2);
  const auto broken = write("broken.json", "{not json");
  EXPECT_EQ(run("gamma --config \"" + broken.string() + "\" " + out("u")).code, 2);
  EXPECT_EQ(run("ratio-scan --reps 10 " + out("u")).code, 2);
}

TEST_F(CliTest, CheckClassAndUpperPower) {
  EXPECT_EQ(run("check-class --psi \"sqrt(x)\" " + out("k")).code, 0);
  EXPECT_EQ(run("upper-power --g \"x^-1.5\" " + out("p")).code, 0);
  EXPECT_EQ(run("upper-power --g \"exp(-x)\" " + out("p")).code, 1);
}

TEST_F(CliTest, BuildClosure) {
  const auto r = run("build --rep-c 1 --eps \"1/ln(e+x)\" --psi \"sqrt(x)\" --x 10 " + out("b"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "b" / "build.csv"));
}

TEST_F(CliTest, LightTailScanFails) {
  const auto cfg = write("exp.json", R"({
    "command": "ratio-scan", "tail-kind": "exponential", "rate": 1,
    "n": [50, 100], "reps": 20000, "estimator": "crude", "seed": 3
  })");
  const auto r = run("ratio-scan --config \"" + cfg.string() + "\" " + out("l"));
  EXPECT_EQ(r.code, 1) << r.out;
  const auto m = nlohmann::json::parse(slurp(dir_ / "l" / "manifest.json"));
  EXPECT_EQ(m["verdicts"]["ratio_trend"], "FAIL");
  EXPECT_EQ(m["verdicts"]["psi_consistency"]["psi_lcf"], "FAIL");
}

TEST_F(CliTest, ScanOutputsAreByteIdentical) {
  const auto cfg = write("p.json", R"({
    "command": "ratio-scan", "alpha": -3, "n": [20, 40], "reps": 20000, "bj-reps": 10000, "seed": 17
  })");
  const auto a = run("ratio-scan --config \"" + cfg.string() + "\" --jobs 1 " + out("a"));
  const auto b = run("ratio-scan --config \"" + cfg.string() + "\" --jobs 2 " + out("b"));
  ASSERT_NE(a.code, 2) << a.out;
  ASSERT_NE(b.code, 2) << b.out;
  for (const char* f : {"results.csv", "plot.csv", "plot.svg"}) {
    const auto x = slurp(dir_ / "a" / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(dir_ / "b" / f)) << f;
  }
}

TEST_F(CliTest, SimulateAndReport) {
  auto r = run("simulate --n 1 --x 8.5 --reps 200000 --estimator crude " + out("s"));
  EXPECT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(dir_ / "s" / "results.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,x,estimator,p_hat,se,prediction,ratio,zone_xlnn,zone_ap5,reps,seed");

  const auto cfg = write("p.json", R"({"alpha": -3, "n": [20, 40, 80], "reps": 50000, "estimator": "crude"})");
  run("ratio-scan --config \"" + cfg.string() + "\" " + out("scan"));
  r = run("report --input \"" + (dir_ / "scan" / "results.csv").string() + "\" " + out("rep"));
  EXPECT_NE(r.code, 2) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "rep" / "plot.svg"));
  EXPECT_NE(r.out.find("crude_sum"), std::string::npos);
}
