// Copyright 2026 The HAT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hat/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hat/error.hpp"

namespace hat::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("hat_cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = (root_ / "tiny.json").string();
    std::ofstream(config_) << R"({"scene": {"tracks": 4, "frames": 8},
      "data": {"train_scenes": 2, "test_scenes": 1}, "training": {"epochs": 1},
      "model": {"channels": 8}})";
  }
  void TearDown() override { fs::remove_all(root_); }

  int hat(std::vector<std::string> args) {
    args.insert(args.begin(), "hat");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }
  std::string out_dir(const std::string& name) const { return (root_ / name).string(); }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path root_;
  std::string config_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, FullPipelineWritesArtifacts) {
  const std::string o = out_dir("run");
  ASSERT_EQ(hat({"gen", "-c", config_, "-o", o}), kExitOk) << err_.str();
  ASSERT_EQ(hat({"train", "-c", config_, "-o", o}), kExitOk) << err_.str();
  ASSERT_EQ(hat({"eval", "-c", config_, "-o", o}), kExitOk) << err_.str();
  ASSERT_EQ(hat({"compare", "-c", config_, "-o", o}), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("hat"), std::string::npos);
  ASSERT_EQ(hat({"weights", "-c", config_, "-o", o}), kExitOk) << err_.str();
  for (const char* f : {kTrainScenesFile, kTestScenesFile, kHatParamsFile, kHatM1ParamsFile,
                        kImplicitParamsFile, kLossFile, kEvalCsvFile, kEvalJsonFile, kLatencyFile,
                        kCompareFile, kWeightsFile}) {
    EXPECT_TRUE(fs::exists(fs::path(o) / f)) << f;
  }
  EXPECT_FALSE(fs::exists(fs::path(o) / kLockFile));
}

TEST_F(CliTest, GenTwiceIsByteIdentical) {
  ASSERT_EQ(hat({"gen", "-c", config_, "-o", out_dir("a")}), kExitOk);
  ASSERT_EQ(hat({"gen", "-c", config_, "-o", out_dir("b")}), kExitOk);
  for (const char* f : {kTrainScenesFile, kTestScenesFile})
    EXPECT_EQ(slurp(root_ / "a" / f), slurp(root_ / "b" / f)) << f;
}

TEST_F(CliTest, MissingInputsExitTwo) {
  EXPECT_EQ(hat({"train", "-c", config_, "-o", out_dir("empty")}), kExitMissingInput);
  EXPECT_NE(err_.str().find("\"exit_code\":2"), std::string::npos) << err_.str();
  EXPECT_EQ(hat({"gen", "-c", out_dir("nope.json")}), kExitMissingInput);
}

TEST_F(CliTest, ValidationErrorsExitThree) {
  const std::string bad = (root_ / "bad.json").string();
  std::ofstream(bad) << R"({"scene": {"bogus": 1}})";
  EXPECT_EQ(hat({"gen", "-c", bad, "-o", out_dir("x")}), kExitValidation);
  EXPECT_NE(err_.str().find("config.scene.bogus"), std::string::npos);
  EXPECT_EQ(hat({"gen", "--no-such-flag"}), kExitValidation);
  EXPECT_EQ(hat({}), kExitValidation);
}

TEST_F(CliTest, StaleScenesAreRejected) {
  const std::string o = out_dir("stale");
  ASSERT_EQ(hat({"gen", "-c", config_, "-o", o}), kExitOk);
  const std::string other = (root_ / "other.json").string();
  std::ofstream(other) << R"({"scene": {"tracks": 5, "frames": 8},
    "data": {"train_scenes": 2, "test_scenes": 1}, "training": {"epochs": 1},
    "model": {"channels": 8}})";
  EXPECT_EQ(hat({"train", "-c", other, "-o", o}), kExitValidation);
}

TEST_F(CliTest, LockedDirectoryIsRefused) {
  const std::string o = out_dir("locked");
  fs::create_directories(o);
  std::ofstream(fs::path(o) / kLockFile) << "1\n";
  EXPECT_EQ(hat({"gen", "-c", config_, "-o", o}), kExitFailure);
  EXPECT_NE(err_.str().find("locked"), std::string::npos);
  EXPECT_FALSE(fs::exists(fs::path(o) / kTrainScenesFile));
}

TEST_F(CliTest, SchemaAndVersion) {
  ASSERT_EQ(hat({"schema"}), kExitOk);
  EXPECT_NE(out_.str().find("\"additionalProperties\""), std::string::npos);
  ASSERT_EQ(hat({"--version"}), kExitOk);
  EXPECT_NE(out_.str().find(kToolVersion), std::string::npos);
}

TEST(ExitCodes, MapLibraryErrors) {
  EXPECT_EQ(exit_code_for(MissingInputError("x")), kExitMissingInput);
  EXPECT_EQ(exit_code_for(ConfigError("x")), kExitValidation);
  EXPECT_EQ(exit_code_for(ValidationError("x")), kExitValidation);
  EXPECT_EQ(exit_code_for(TrainingError("x", 0)), kExitNumerical);
  EXPECT_EQ(exit_code_for(NumericalError("x")), kExitNumerical);
  EXPECT_EQ(exit_code_for(Error("x")), kExitFailure);
}

TEST(Context, OutputDirectoryPrecedence) {
  ExperimentConfig c = ExperimentConfig::defaults();
  c.output_dir = "from_config";
  EXPECT_EQ(make_context(c, "override").out_dir, "override");
  EXPECT_EQ(make_context(c).out_dir, "from_config");
  EXPECT_EQ(make_context(c).provenance().seed, c.training.seed);
  EXPECT_EQ(make_context(c).data_provenance().seed, c.data.seed);
}

}  // namespace
}  // namespace hat::cli
