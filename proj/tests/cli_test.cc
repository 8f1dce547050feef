#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "vecplan/config.h"
#include "vecplan/error.h"

namespace vecplan {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int status = 0;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::path(VECPLAN_TEST_WORK_DIR) / (std::string("cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  Outcome run(const std::string& args) const {
    const fs::path log = dir_ / "stdout.txt";
    const std::string cmd = std::string("env -u VECPLAN_OUTPUT_ROOT ") + VECPLAN_BINARY + " " + args +
                            " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    Outcome r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.output = read(log);
    return r;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string out(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

// Small settings so full commands finish in seconds.
const char* kSmall =
    " --set train.epochs=2 --set train.train_scenarios=8 --set train.val_scenarios=2"
    " --set interact.d_model=8 --set metrics.eval_scenarios=6";

TEST_F(Cli, GenerateIsByteIdentical) {
  const char* files[] = {"scenarios/scenario_0000.json", "scenarios/scenario_0002.json",
                         "generate.config.json"};
  ASSERT_EQ(run("-o " + out("a") + " generate -n 3").status, 0);
  std::vector<std::string> first;
  for (const char* f : files) first.push_back(read(dir_ / "a" / f));
  fs::remove_all(dir_ / "a");
  ASSERT_EQ(run("-o " + out("a") + " generate -n 3").status, 0);
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_FALSE(first[i].empty()) << files[i];
    EXPECT_EQ(first[i], read(dir_ / "a" / files[i])) << files[i];
  }
  EXPECT_FALSE(fs::exists(dir_ / "a" / "scenarios" / "scenario_0003.json"));
  ASSERT_EQ(run("-o " + out("b") + " generate -n 3").status, 0);
  EXPECT_EQ(first[0], read(dir_ / "b" / files[0]));
}

TEST_F(Cli, ExpertEvaluationHasZeroL2) {
  ASSERT_EQ(run("-o " + out("g") + " generate -n 4").status, 0);
  const Outcome r = run("-o " + out("e") + " evaluate --planner expert --scenarios " +
                    out("g/scenarios"));
  ASSERT_EQ(r.status, 0) << r.output;
  const std::string csv = read(dir_ / "e" / "report.csv");
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(row.substr(0, row.find(',')), "expert");
  EXPECT_NE(row.find(",0.000000,0.000000,0.000000,0.000000,"), std::string::npos) << row;
  EXPECT_TRUE(fs::exists(dir_ / "e" / "evaluate.config.json"));
}

TEST_F(Cli, AblateTwoArms) {
  const Outcome r = run(std::string("-o ") + out("x") + kSmall + " ablate --arms 3,7");
  ASSERT_EQ(r.status, 0) << r.output;
  const std::string csv = read(dir_ / "x" / "ablation.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3) << csv;
  EXPECT_NE(csv.find("\n3,"), std::string::npos);
  EXPECT_NE(csv.find("\n7,"), std::string::npos);
}

TEST_F(Cli, CheckDetectsDrift) {
  const std::string base = "-o " + out("s") + " --set simulator.refine_steps=5 simulate";
  ASSERT_EQ(run(base + " --planner constant_velocity").status, 0);
  const Outcome ok = run("--check " + base + " --planner constant_velocity");
  EXPECT_EQ(ok.status, 0) << ok.output;
  const Outcome drift = run("--check " + base + " --planner refine");
  EXPECT_EQ(drift.status, 2);
  EXPECT_NE(drift.output.find("error: drift"), std::string::npos) << drift.output;
}

TEST_F(Cli, TrainThenSimulateWithCheckpoint) {
  const Outcome t = run(std::string("-o ") + out("t") + kSmall + " train");
  ASSERT_EQ(t.status, 0) << t.output;
  EXPECT_TRUE(fs::exists(dir_ / "t" / "model.ckpt"));
  const std::string log = read(dir_ / "t" / "train_log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
  const Outcome s = run(std::string("-o ") + out("t") + kSmall +
                    " --set simulator.ticks=3 simulate --planner model --checkpoint " +
                    out("t/model.ckpt"));
  ASSERT_EQ(s.status, 0) << s.output;
  EXPECT_TRUE(fs::exists(dir_ / "t" / "rollout_summary.csv"));
  const Outcome bad = run(std::string("-o ") + out("t") + " simulate --planner model --checkpoint " +
                      out("t/model.ckpt"));
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.output.find("error: checkpoint"), std::string::npos) << bad.output;
}

TEST_F(Cli, UnknownConfigKey) {
  std::ofstream(dir_ / "bad.json") << R"({"train": {"epochz": 3}})";
  const Outcome r = run("-c " + out("bad.json") + " -o " + out("o") + " generate -n 1");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("error: config"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("epochz"), std::string::npos);
}

TEST_F(Cli, MissingScenarioFile) {
  const Outcome r = run("-o " + out("o") + " plan --scenario " + out("nope.json"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("error: missing_file"), std::string::npos) << r.output;
}

TEST_F(Cli, EnvironmentOutputRootAndFlagPrecedence) {
  const std::string cmd = std::string("VECPLAN_OUTPUT_ROOT=") + out("env") + " " + VECPLAN_BINARY +
                          " generate -n 1 > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "scenarios" / "scenario_0000.json"));
  const std::string flag = std::string("VECPLAN_OUTPUT_ROOT=") + out("env2") + " " + VECPLAN_BINARY +
                           " -o " + out("flag") + " generate -n 1 > /dev/null 2>&1";
  ASSERT_EQ(std::system(flag.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "flag" / "scenarios" / "scenario_0000.json"));
  EXPECT_FALSE(fs::exists(dir_ / "env2"));
}

TEST(RunConfigText, DefaultsRoundTrip) {
  const RunConfig c;
  const std::string text = run_config_to_string(c);
  EXPECT_EQ(run_config_to_string(parse_run_config(text)), text);
  EXPECT_EQ(parse_run_config("{}").train.epochs, 60);
  EXPECT_DOUBLE_EQ(parse_run_config("{}").train.learning_rate, 2e-4);
  EXPECT_DOUBLE_EQ(parse_run_config("{}").constraints.agent_range, 3.0);
}

TEST(RunConfigText, PartialSectionsAndErrors) {
  const RunConfig c = parse_run_config(R"({"seed": 3, "weights": {"collision": 0}})");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.weights.collision, 0.0);
  EXPECT_EQ(c.weights.boundary, 1.0);
  auto category = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const Error& e) {
      return e.category();
    }
    return ErrorCategory::kInvalidArgument;
  };
  EXPECT_EQ(category(R"({"nope": 1})"), ErrorCategory::kConfig);
  EXPECT_EQ(category(R"({"train": {"epochs": "many"}})"), ErrorCategory::kConfig);
  EXPECT_EQ(category(R"({"train": {"epochs": 0}})"), ErrorCategory::kConfig);
  EXPECT_EQ(category("{"), ErrorCategory::kParse);
}

TEST(RunConfigText, Overrides) {
  RunConfig c;
  apply_override(c, "train.epochs=5");
  apply_override(c, "simulator.planner=expert");
  apply_override(c, "seed=11");
  EXPECT_EQ(c.train.epochs, 5);
  EXPECT_EQ(c.simulator.planner, "expert");
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.train_config().seed, 11u);
  EXPECT_THROW(apply_override(c, "train.nope=1"), Error);
  EXPECT_THROW(apply_override(c, "train.epochs"), Error);
}

}  // namespace
}  // namespace vecplan
