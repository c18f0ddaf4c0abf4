// Copyright The jscope Authors
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "jscope/serialize.hpp"
#include "jscope/weights_io.hpp"
#include "support.hpp"

namespace jscope {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("jscope_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(JSCOPE_CLI_PATH) + " " + args + " >" + (dir_ / "stdout.txt").string() +
                            " 2>" + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out(const std::string& name) const { return (dir_ / name).string(); }

  /// Fresh tiny model saved to disk.
  std::string weights() const {
    const auto cfg = testing::tiny_config();
    save_weights(cfg, init_weights(cfg), dir_ / "tiny.jsw");
    return out("tiny.jsw");
  }

  fs::path dir_;
};

TEST_F(Cli, SimulateLogistic) {
  ASSERT_EQ(run("simulate --system logistic --r 3.8 --x0 0.5 --n 3 --out " + out("a")), 0);
  const auto j = Json::parse(slurp(dir_ / "a" / "trajectory.json"));
  const auto raw = j["raw_series"].get<std::vector<double>>();
  EXPECT_NEAR(raw[1], 0.95, 1e-15);
  EXPECT_NEAR(raw[2], 0.1805, 1e-14);
  EXPECT_EQ(slurp(dir_ / "a" / "prompt.txt"), j["prompt"].get<std::string>() + "\n");
  EXPECT_TRUE(fs::exists(dir_ / "a" / "manifest.json"));
}

TEST_F(Cli, SimulateRejectsBadRate) {
  EXPECT_EQ(run("simulate --system logistic --r 5 --out " + out("a")), 1);
  EXPECT_EQ(run("simulate --system henon --out " + out("b")), 1);
  EXPECT_EQ(run("simulate --nonsense --out " + out("c")), 1);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(run("simulate --system brownian --seed 3 --n 64 --out " + out("a")), 0);
  ASSERT_EQ(run("simulate --system brownian --seed 3 --n 64 --out " + out("b")), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "trajectory.json"), slurp(dir_ / "b" / "trajectory.json"));
}

TEST_F(Cli, RefusesToOverwrite) {
  ASSERT_EQ(run("simulate --n 8 --out " + out("a")), 0);
  EXPECT_NE(run("simulate --n 8 --out " + out("a")), 0);
  EXPECT_EQ(run("simulate --n 8 --overwrite --out " + out("a")), 0);
}

TEST_F(Cli, SemanticNeedsTarget) {
  EXPECT_EQ(run("attribute --weights " + weights() + " --prompt-text 29,30 --scope semantic --out " + out("a")), 1);
  EXPECT_EQ(run("attribute --weights " + weights() + " --prompt-text 29,30 --scope semantic --target 200 --out " +
                out("b")),
            1);
}

TEST_F(Cli, PassCountsPerScope) {
  const auto w = weights();
  ASSERT_EQ(run("attribute --weights " + w + " --prompt-text 29,30,31 --scope temperature --out " + out("t")), 0);
  ASSERT_EQ(run("attribute --weights " + w + " --prompt-text 29,30,31 --scope fisher --out " + out("f")), 0);
  ASSERT_EQ(run("attribute --weights " + w + " --prompt-text 29,30,31 --scope semantic --target 32 --out " + out("s")),
            0);
  EXPECT_EQ(Json::parse(slurp(dir_ / "t" / "attribution.json"))["backward_passes"], 1);
  EXPECT_EQ(Json::parse(slurp(dir_ / "f" / "attribution.json"))["backward_passes"], 8);
  const auto s = Json::parse(slurp(dir_ / "s" / "attribution.json"));
  EXPECT_EQ(s["backward_passes"], 1);
  EXPECT_EQ(s["target"], vocab::number_token(32));
  EXPECT_TRUE(fs::exists(dir_ / "s" / "attribution.svg"));
}

TEST_F(Cli, FisherBudgetIsEnforced) {
  EXPECT_EQ(run("attribute --weights " + weights() + " --prompt-text 29,30,31 --scope fisher --fisher-budget 10 --out " +
                out("a")),
            1);
}

TEST_F(Cli, IntegratedWithProfile) {
  ASSERT_EQ(run("attribute --weights " + weights() +
                " --prompt-text 29,30 --scope integrated --target , --steps 16 --profile --out " + out("a")),
            0);
  const auto j = Json::parse(slurp(dir_ / "a" / "attribution.json"));
  EXPECT_EQ(j["backward_passes"], 16);
  EXPECT_EQ(j["steps"], 16);
  EXPECT_TRUE(fs::exists(dir_ / "a" / "ig_profile.json"));
}

TEST_F(Cli, VerifyPassesOnFreshModel) {
  EXPECT_EQ(run("verify --mc-samples 4000 --out " + out("a")), 0);
  const auto j = Json::parse(slurp(dir_ / "a" / "verify.json"));
  EXPECT_TRUE(j["pass"].get<bool>());
}

TEST_F(Cli, TrainRejectsEmptyDataset) {
  std::ofstream(dir_ / "empty.txt") << "";
  EXPECT_EQ(run("train --dataset " + out("empty.txt") + " --out " + out("a")), 1);
}

TEST_F(Cli, TrainWritesArtifacts) {
  ASSERT_EQ(run("dataset --task motif --count 8 --out " + out("d")), 0);
  ASSERT_EQ(run("train --dataset " + out("d/dataset.txt") + " --d-model 8 --layers 1 --heads 2 --d-ff 16 --steps 3 --out " +
                out("t")),
            0);
  const auto ck = load_weights(dir_ / "t" / "weights.jsw");
  EXPECT_EQ(ck.config.d_model, 8u);
  EXPECT_EQ(slurp(dir_ / "t" / "loss.csv").rfind("step,loss\n", 0), 0u);
}

TEST_F(Cli, ReportBundlesRecords) {
  const auto w = weights();
  std::string records;
  for (const char* scope : {"temperature", "fisher", "temperature"}) {
    const std::string name = std::string("r") + std::to_string(records.size());
    ASSERT_EQ(run("attribute --weights " + w + " --prompt-text 29,30 --scope " + scope + " --out " + out(name)), 0);
    records += " " + out(name) + "/attribution.json";
  }
  ASSERT_EQ(run("report" + records + " --out " + out("rep")), 0);
  const auto html = slurp(dir_ / "rep" / "report.html");
  std::size_t n = 0;
  for (auto at = html.find("<svg"); at != std::string::npos; at = html.find("<svg", at + 1)) ++n;
  EXPECT_EQ(n, 3u);
  ASSERT_EQ(run("replay " + out("rep/manifest.json") + " --out " + out("rep2")), 0);
  EXPECT_EQ(slurp(dir_ / "rep2" / "report.html"), html);
}

TEST_F(Cli, ReplayReproducesOutputs) {
  ASSERT_EQ(run("attribute --weights " + weights() + " --prompt-text 29,30,31 --scope fisher --out " + out("a")), 0);
  ASSERT_EQ(run("replay " + out("a/manifest.json") + " --out " + out("b")), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "attribution.json"), slurp(dir_ / "b" / "attribution.json"));
  EXPECT_EQ(slurp(dir_ / "a" / "attribution.svg"), slurp(dir_ / "b" / "attribution.svg"));
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
  std::ofstream(dir_ / "cfg.json") << R"({"simulate": {"system": "logistic", "r": 3.6, "n": 5}})";
  ASSERT_EQ(run("simulate --config " + out("cfg.json") + " --out " + out("a")), 0);
  ASSERT_EQ(run("simulate --config " + out("cfg.json") + " --r 3.9 --out " + out("b")), 0);
  const auto a = Json::parse(slurp(dir_ / "a" / "trajectory.json"));
  const auto b = Json::parse(slurp(dir_ / "b" / "trajectory.json"));
  EXPECT_EQ(a["spec"]["r"], 3.6);
  EXPECT_EQ(a["spec"]["n"], 5);
  EXPECT_EQ(b["spec"]["r"], 3.9);
}

TEST_F(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

}  // namespace
}  // namespace jscope
