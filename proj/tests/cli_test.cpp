#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "mflqr/cli.hpp"
#include "mflqr/data_io.hpp"
#include "mflqr/pipeline.hpp"

#ifndef MFLQR_CLI_PATH
#error "MFLQR_CLI_PATH must name the mflqr executable"
#endif

namespace mflqr {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mflqr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Runs the tool with `args`, output discarded, and returns its exit status.
  int run(const std::string& args) const {
    const std::string command = std::string(MFLQR_CLI_PATH) + " " + args + " > " + (dir_ / "log.txt").string() + " 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string log() const { return detail::read_file(dir_ / "log.txt"); }

  fs::path write_config(const std::string& name, const std::string& text) const {
    const fs::path path = dir_ / name;
    write_text_atomic(path, text);
    return path;
  }

  fs::path dir_;
};

constexpr const char* kShortB747 = "[run]\nplant = b747\n[sampling]\nrate_hz = 10\nduration = 5\n";

TEST_F(CliTest, NoSubcommandIsAParseError) {
  EXPECT_EQ(run(""), cli::kParse);
  EXPECT_EQ(run("frobnicate"), cli::kParse);
  EXPECT_EQ(run("generate --config " + (dir_ / "missing.ini").string()), cli::kParse);
  EXPECT_EQ(run("--help"), cli::kSuccess);
}

TEST_F(CliTest, BadConfigIsAParseError) {
  const fs::path config = write_config("bad.ini", "[run]\nplant = b747\n[noise]\nsigmaa = 1\n");
  EXPECT_EQ(run("generate --config " + config.string() + " --out " + dir_.string()), cli::kParse);
  EXPECT_NE(log().find("line 4"), std::string::npos) << log();
}

TEST_F(CliTest, GenerateIsDeterministic) {
  const fs::path config = write_config("c.ini", kShortB747);
  ASSERT_EQ(run("generate --config " + config.string() + " --out " + (dir_ / "a").string()), 0) << log();
  ASSERT_EQ(run("generate --config " + config.string() + " --out " + (dir_ / "b").string()), 0) << log();
  EXPECT_EQ(detail::read_file(dir_ / "a" / "dataset.csv"), detail::read_file(dir_ / "b" / "dataset.csv"));
  ASSERT_EQ(run("generate --config " + config.string() + " --seed 2 --out " + (dir_ / "c").string()), 0);
  EXPECT_NE(detail::read_file(dir_ / "a" / "dataset.csv"), detail::read_file(dir_ / "c" / "dataset.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "resolved_config.ini"));
}

TEST_F(CliTest, NoiselessDatasetEqualsSimulation) {
  const fs::path config = write_config("c.ini", std::string(kShortB747) + "[noise]\nsigma = 0\n");
  ASSERT_EQ(run("generate --config " + config.string() + " --out " + dir_.string()), 0) << log();
  const DataSet data = read_dataset(dir_ / "dataset.csv");
  Config parsed = Config::load(config);
  const RunConfig c = RunConfig::from_config(parsed);
  const Trajectory traj = simulate_excitation(c, c.dt(), c.substeps);
  EXPECT_EQ(data.outputs, traj.states);
  EXPECT_EQ(data.inputs, traj.inputs);
}

TEST_F(CliTest, ShortDatasetIsDegenerate) {
  write_text_atomic(dir_ / "dataset.csv", "t,u_1,y_1,y_2,y_3,y_4\n0,1,1,1,1,1\n0.1,1,2,2,2,2\n0.2,1,3,3,3,3\n");
  EXPECT_EQ(run("synthesize --out " + dir_.string()), cli::kHashMismatch);
  EXPECT_EQ(run("synthesize --force --out " + dir_.string()), cli::kDegenerateData) << log();
}

TEST_F(CliTest, MalformedDatasetIsInvalidInput) {
  write_text_atomic(dir_ / "dataset.csv", "t,u_1,y_1\n0,1,1\n0.1,1,nan\n");
  EXPECT_EQ(run("synthesize --force --out " + dir_.string()), cli::kInvalidInput) << log();
  EXPECT_EQ(run("synthesize --force --data " + (dir_ / "nope.csv").string() + " --out " + dir_.string()),
            cli::kIoFailure);
}

TEST_F(CliTest, IdenticalGainsHaveZeroDeviation) {
  ASSERT_EQ(run("baseline --out " + dir_.string()), 0) << log();
  fs::copy_file(dir_ / "baseline.txt", dir_ / "result.txt");
  ASSERT_EQ(run("compare --out " + dir_.string()), 0) << log();
  const auto sections = parse_sections(detail::read_file(dir_ / "report.txt"));
  for (const auto& s : sections) {
    if (s.name == "summary") {
      EXPECT_EQ(s.find("max_rel_deviation")->value, "0");
      EXPECT_EQ(s.find("rms_difference")->value, "0");
      EXPECT_EQ(s.find("stable_mf")->value, "true");
    }
  }
  EXPECT_TRUE(fs::exists(dir_ / "figure_closed_loop_b747.csv"));
}

TEST_F(CliTest, HashMismatchNeedsForce) {
  ASSERT_EQ(run("baseline --out " + dir_.string()), 0) << log();
  fs::copy_file(dir_ / "baseline.txt", dir_ / "result.txt");
  const fs::path other = write_config("other.ini", "[run]\nplant = b747\nseed = 5\n");
  EXPECT_EQ(run("compare --config " + other.string() + " --out " + dir_.string()), cli::kHashMismatch);
  EXPECT_EQ(run("compare --force --config " + other.string() + " --out " + dir_.string()), 0) << log();
  EXPECT_NE(log().find("warning"), std::string::npos);
}

TEST_F(CliTest, PrintedGainsDeviateInTheRudderLoop) {
  ASSERT_EQ(run("baseline --out " + dir_.string()), 0) << log();
  const std::string hash = RunConfig::defaults(PlantKind::kB747).hash();
  write_text_atomic(dir_ / "result.txt", "[meta]\nconfig_hash = " + hash +
                                             "\n[K]\nrows = 1\ncols = 4\nrow = 9.2236, -6.6657, -3.1473, -2.9555\n");
  ASSERT_EQ(run("compare --out " + dir_.string()), 0) << log();
  for (const auto& s : parse_sections(detail::read_file(dir_ / "report.txt"))) {
    if (s.name == "summary") {
      double v = 0.0;
      ASSERT_TRUE(detail::parse_double(s.find("max_rel_deviation")->value, v));
      EXPECT_NEAR(v, 0.108, 1e-3);
      EXPECT_EQ(s.find("stable_mf")->value, "true");
    }
  }
}

TEST_F(CliTest, ZeroGainOnUnstablePlantIsFlagged) {
  const fs::path config = write_config(
      "c.ini", "[run]\nplant = custom\n[plant]\nA = 0.5 0; 0 -1\nB = 1; 1\nC = 1 0; 0 1\nx0 = 0, 0\n"
               "[weights]\nM = 1, 1\nR = 1\n[reference]\nduration = 4\nhorizon = 5\n");
  ASSERT_EQ(run("baseline --config " + config.string() + " --out " + dir_.string()), 0) << log();
  Config parsed = Config::load(config);
  const std::string hash = RunConfig::from_config(parsed).hash();
  write_text_atomic(dir_ / "result.txt", "[meta]\nconfig_hash = " + hash + "\n[K]\nrows = 1\ncols = 2\nrow = 0, 0\n");
  ASSERT_EQ(run("compare --config " + config.string() + " --out " + dir_.string()), 0) << log();
  const std::string report = detail::read_file(dir_ / "report.txt");
  EXPECT_NE(report.find("flag_mf = UnstableClosedLoop"), std::string::npos) << report;
  EXPECT_EQ(report.find("flag_lqr"), std::string::npos);
}

TEST_F(CliTest, UndetectablePlantIsAModelError) {
  const fs::path config = write_config(
      "c.ini", "[run]\nplant = custom\n[plant]\nA = 0 1; 0 0\nB = 0; 1\nC = 1 0; 0 1\nx0 = 0, 0\n"
               "[weights]\nM = 0, 1\nR = 1\n");
  EXPECT_EQ(run("baseline --config " + config.string() + " --out " + dir_.string()), cli::kModel);
  EXPECT_NE(log().find("NotDetectable"), std::string::npos) << log();
}

TEST_F(CliTest, VerifyLemmas) {
  EXPECT_EQ(run("verify-lemmas --out " + dir_.string()), 0) << log();
  EXPECT_TRUE(fs::exists(dir_ / "verify_report.txt"));
  EXPECT_EQ(run("verify-lemmas --corrupt-p 0.1 --out " + dir_.string()), cli::kToleranceExceeded);
  EXPECT_NE(log().find("EXCEEDED"), std::string::npos);
}

TEST_F(CliTest, CleanPipelineEndToEnd) {
  const fs::path config = write_config("c.ini", "[run]\nplant = b747\n[sampling]\nrate_hz = 100\nsubsteps = 1\n"
                                                "[noise]\nsigma = 0\n");
  const std::string common = " --config " + config.string() + " --out " + dir_.string();
  ASSERT_EQ(run("generate" + common), 0) << log();
  ASSERT_EQ(run("synthesize" + common), 0) << log();
  ASSERT_EQ(run("baseline" + common), 0) << log();
  ASSERT_EQ(run("compare" + common), 0) << log();
  const ResultFile result = read_result(dir_ / "result.txt");
  EXPECT_TRUE(result.result.diagnostics.converged);
  const Matrix K_lqr = read_result(dir_ / "baseline.txt").result.K;
  EXPECT_LE((result.result.K - K_lqr).cwiseAbs().maxCoeff() / K_lqr.cwiseAbs().maxCoeff(), 0.02);
  // A dataset generated under another seed is refused.
  EXPECT_EQ(run("synthesize --seed 3" + common), cli::kHashMismatch);
}

}  // namespace
}  // namespace mflqr
