// Copyright 2026 The gbm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gbm/commands.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "gbm/io.h"
#include "gbm/ir_module.h"
#include "gbm/program_graph.h"
#include "json.hpp"
#include "test_util.h"

namespace gbm {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gbm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<fs::path> FilesUnder(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"train-vocab", "--bogus-flag"}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"--feature-mode", "pixels", "make-synthetic-corpus", "--out-dir", "x"}).code,
            kExitUsage);
  const fs::path dir = ScratchDir("cli_usage");
  EXPECT_EQ(Cli({"build-graphs", "--out-dir", dir.string()}).code, kExitUsage);
}

TEST(CliTest, HelpExitsZero) {
  const CliRun r = Cli({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("build-graphs"), std::string::npos);
}

TEST(CliTest, MissingInputIsDataError) {
  const fs::path dir = ScratchDir("cli_missing");
  const CliRun r = Cli({"train-vocab", "--manifest", (dir / "nope.jsonl").string(), "--out-dir",
                        dir.string()});
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(CliTest, SyntheticCorpusLayoutAndParse) {
  const fs::path dir = ScratchDir("cli_synthetic");
  ASSERT_EQ(Cli({"make-synthetic-corpus", "--out-dir", dir.string()}).code, kExitOk);
  const auto files = FilesUnder(dir, ".ll");
  ASSERT_EQ(files.size(), 64u);
  std::size_t source = 0;
  for (const fs::path& f : files) {
    const fs::path rel = fs::relative(f, dir);
    const std::vector<fs::path> parts(rel.begin(), rel.end());
    ASSERT_EQ(parts.size(), 4u) << rel;
    ASSERT_TRUE(parts[1] == "source" || parts[1] == "binary") << rel;
    source += parts[1] == "source";
    EXPECT_EQ(parts[2], "c");
    const ProgramGraph g = BuildGraph(ParseModule(ReadFileBytes(f), rel.string()));
    EXPECT_GT(g.nodes.size(), 5u) << rel;
  }
  EXPECT_EQ(source, 32u);
}

TEST(CliTest, BuildGraphsSkipsMalformedAndIsReproducible) {
  const fs::path in = ScratchDir("cli_build_in");
  const fs::path good = in / "taskA" / "source" / "c";
  const fs::path bad = in / "taskB" / "binary" / "c";
  fs::create_directories(good);
  fs::create_directories(bad);
  fs::copy_file(FixturePath("loop.ll"), good / "loop.ll");
  fs::copy_file(FixturePath("calls.ll"), good / "calls.ll");
  WriteFileBytes(bad / "broken.ll", "define i32 @f( {\n  this is not IR\n");

  const fs::path out1 = ScratchDir("cli_build_out1");
  const fs::path out2 = ScratchDir("cli_build_out2");
  const CliRun r1 = Cli({"build-graphs", "--input", in.string(), "--out-dir", out1.string()});
  ASSERT_EQ(r1.code, kExitOk) << r1.err;
  const nlohmann::json summary = nlohmann::json::parse(r1.out);
  EXPECT_EQ(summary.at("built"), 2);
  EXPECT_EQ(summary.at("failed"), 1);
  EXPECT_NE(summary.at("failures")[0].get<std::string>().find("broken.ll"), std::string::npos);

  const CliRun r2 =
      Cli({"--workers", "3", "build-graphs", "--input", in.string(), "--out-dir", out2.string()});
  ASSERT_EQ(r2.code, kExitOk) << r2.err;
  const auto g1 = FilesUnder(out1, ".pgraph");
  const auto g2 = FilesUnder(out2, ".pgraph");
  ASSERT_EQ(g1.size(), 2u);
  ASSERT_EQ(g2.size(), 2u);
  for (std::size_t i = 0; i < g1.size(); ++i) {
    EXPECT_EQ(fs::relative(g1[i], out1), fs::relative(g2[i], out2));
    EXPECT_EQ(ReadFileBytes(g1[i]), ReadFileBytes(g2[i]));
  }
  EXPECT_EQ(ReadFileBytes(out1 / "manifest.jsonl"), ReadFileBytes(out2 / "manifest.jsonl"));
}

TEST(CliTest, AllMalformedIsDataError) {
  const fs::path in = ScratchDir("cli_allbad");
  fs::create_directories(in / "t" / "source" / "c");
  WriteFileBytes(in / "t" / "source" / "c" / "x.ll", "garbage\n");
  EXPECT_EQ(Cli({"build-graphs", "--input", in.string(), "--out-dir",
                 ScratchDir("cli_allbad_out").string()})
                .code,
            kExitDataError);
}

// Runs the whole pipeline on a small corpus with a tiny model.
class CliPipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(ScratchDir("cli_pipeline"));
    const fs::path& r = *root_;
    ASSERT_EQ(Cli({"make-synthetic-corpus", "--out-dir", (r / "corpus").string(), "--variants",
                   "2"})
                  .code,
              kExitOk);
    ASSERT_EQ(Cli({"build-graphs", "--input", (r / "corpus").string(), "--out-dir",
                   (r / "graphs").string()})
                  .code,
              kExitOk);
    ASSERT_EQ(Cli({"train-vocab", "--manifest", (r / "graphs/manifest.jsonl").string(),
                   "--out-dir", (r / "vocab").string()})
                  .code,
              kExitOk);
    ASSERT_EQ(Cli({"make-pairs", "--manifest", (r / "graphs/manifest.jsonl").string(),
                   "--out-dir", (r / "pairs").string()})
                  .code,
              kExitOk);
  }
  static void TearDownTestSuite() {
    delete root_;
    root_ = nullptr;
  }

  static std::vector<std::string> TrainArgs(const fs::path& out) {
    const fs::path& r = *root_;
    return {"train",         "--train-pairs",
            (r / "pairs/train_pairs.jsonl").string(),
            "--val-pairs",   (r / "pairs/val_pairs.jsonl").string(),
            "--vocab",       (r / "vocab/vocab.json").string(),
            "--out-dir",     out.string(),
            "--hidden-dim",  "8",
            "--token-embed-dim", "4",
            "--num-layers",  "2",
            "--max-epochs",  "2"};
  }

  static fs::path* root_;
};

fs::path* CliPipelineTest::root_ = nullptr;

TEST_F(CliPipelineTest, TrainEvalPredict) {
  const fs::path& r = *root_;
  const CliRun train = Cli(TrainArgs(r / "model"));
  ASSERT_EQ(train.code, kExitOk) << train.err;
  EXPECT_TRUE(fs::exists(r / "model/model.ckpt"));
  EXPECT_TRUE(fs::exists(r / "model/resolved_config.json"));
  const nlohmann::json report = nlohmann::json::parse(ReadFileBytes(r / "model/report.json"));
  EXPECT_EQ(report.at("epochs").size(), 2u);

  const CliRun eval = Cli({"eval", "--checkpoint", (r / "model/model.ckpt").string(), "--pairs",
                           (r / "pairs/test_pairs.jsonl").string(), "--out-dir",
                           (r / "eval").string()});
  ASSERT_EQ(eval.code, kExitOk) << eval.err;
  const nlohmann::json metrics = nlohmann::json::parse(ReadFileBytes(r / "eval/metrics.json"));
  EXPECT_EQ(metrics.at("sweep").size(), 21u);
  EXPECT_TRUE(fs::exists(r / "eval/sweep.csv"));
  EXPECT_TRUE(fs::exists(r / "eval/size_gap.csv"));

  const fs::path src = r / "corpus/gcd/source/c/v0.ll";
  const fs::path bin = r / "corpus/gcd/binary/c/v1.ll";
  const CliRun predict =
      Cli({"predict", "--checkpoint", (r / "model/model.ckpt").string(), src.string(),
           bin.string()});
  ASSERT_EQ(predict.code, kExitOk) << predict.err;
  const nlohmann::json p = nlohmann::json::parse(predict.out);
  const double score = p.at("score").get<double>();
  EXPECT_GE(score, 0.0);
  EXPECT_LE(score, 1.0);
  EXPECT_EQ(p.at("match").get<bool>(), score >= 0.5);

  const CliRun strict = Cli({"--threshold", "1.5", "predict", "--checkpoint",
                             (r / "model/model.ckpt").string(), src.string(), bin.string()});
  EXPECT_FALSE(nlohmann::json::parse(strict.out).at("match").get<bool>());
}

TEST_F(CliPipelineTest, ConfigFileSuppliesDefaultsAndFlagsWin) {
  const fs::path& r = *root_;
  const fs::path config = r / "config.json";
  WriteFileBytes(config, R"({"seed": 4, "train": {"max_epochs": 1, "batch_size": 5}})");
  std::vector<std::string> args = TrainArgs(r / "model_config");
  args.insert(args.begin(), {"--config", config.string()});
  const CliRun run = Cli(args);
  ASSERT_EQ(run.code, kExitOk) << run.err;
  const nlohmann::json resolved =
      nlohmann::json::parse(ReadFileBytes(r / "model_config/resolved_config.json"));
  EXPECT_EQ(resolved.at("global").at("seed"), 4);
  // --max-epochs 2 on the command line overrides the file.
  EXPECT_EQ(resolved.at("options").at("train").at("max_epochs"), 2);
  EXPECT_EQ(resolved.at("options").at("train").at("batch_size"), 5);

  WriteFileBytes(config, R"({"train": {"no_such_field": 1}})");
  args = TrainArgs(r / "model_bad");
  args.insert(args.begin(), {"--config", config.string()});
  EXPECT_EQ(Cli(args).code, kExitUsage);
}

TEST_F(CliPipelineTest, FeatureModeMismatchIsRejected) {
  std::vector<std::string> args = TrainArgs(*root_ / "model_mode");
  args.insert(args.begin(), {"--feature-mode", "text"});
  EXPECT_EQ(Cli(args).code, kExitDataError);
}

}  // namespace
}  // namespace gbm
