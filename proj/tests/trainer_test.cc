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

#include "gbm/trainer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "gbm/io.h"
#include "gbm/status.h"
#include "test_util.h"
#include "testing_support.h"

namespace gbm {
namespace {

ModelConfig TinyModel() {
  ModelConfig c;
  c.token_embed_dim = 8;
  c.hidden_dim = 12;
  c.num_layers = 2;
  c.max_position = 8;
  return c;
}

TrainConfig FewEpochs(std::size_t epochs) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.patience = 0;
  t.seed = 5;
  t.learning_rate = 1e-3;
  return t;
}

class TrainerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { setup_ = new SyntheticSetup(MakeSyntheticSetup(3, 2)); }
  static void TearDownTestSuite() {
    delete setup_;
    setup_ = nullptr;
  }
  static SyntheticSetup* setup_;
};

SyntheticSetup* TrainerTest::setup_ = nullptr;

TEST_F(TrainerTest, ConstantModelLossIsLogTwo) {
  // With the last layer zeroed every score is sigmoid(0) = 1/2, so the BCE
  // of every pair is ln 2 whatever its label.
  MatchModel init(TinyModel(), 1);
  for (auto* name : {"head.fc2.weight", "head.fc2.bias"}) {
    for (double& v : init.parameters().Get(name).value.data) v = 0.0;
  }
  TrainConfig t = FewEpochs(3);
  t.freeze_parameters = true;
  const TrainResult r = Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), t, {},
                              &init.parameters());
  ASSERT_EQ(r.report.epochs.size(), 3u);
  for (const EpochRecord& e : r.report.epochs) {
    EXPECT_NEAR(e.train_loss, std::log(2.0), 1e-12);
    EXPECT_NEAR(e.val_loss, std::log(2.0), 1e-12);
  }
}

TEST_F(TrainerTest, FixedSeedGivesIdenticalFirstEpoch) {
  const TrainConfig t = FewEpochs(1);
  const TrainResult a = Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), t);
  const TrainResult b = Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), t);
  EXPECT_EQ(a.report.epochs[0].train_loss, b.report.epochs[0].train_loss);
  EXPECT_EQ(a.report.epochs[0].val_loss, b.report.epochs[0].val_loss);
}

TEST_F(TrainerTest, DropoutFreeRunsGiveIdenticalCheckpoints) {
  TrainConfig t = FewEpochs(2);
  t.dropout_p = 0.0;
  const std::filesystem::path dir = ScratchDir("trainer_ckpt");
  const TrainResult a = Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), t);
  const TrainResult b = Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), t);
  SaveModel(dir / "a.ckpt", *a.model, setup_->cache->vocabulary());
  SaveModel(dir / "b.ckpt", *b.model, setup_->cache->vocabulary());
  EXPECT_EQ(ReadFileBytes(dir / "a.ckpt"), ReadFileBytes(dir / "b.ckpt"));
}

TEST_F(TrainerTest, SaveLoadPreservesValidationMetrics) {
  const TrainResult r =
      Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), FewEpochs(2));
  const std::filesystem::path path = ScratchDir("trainer_saveload") / "m.ckpt";
  SaveModel(path, *r.model, setup_->cache->vocabulary(), {{"note", "x"}});
  LoadedModel loaded = LoadModel(path);
  EXPECT_EQ(loaded.vocabulary, setup_->cache->vocabulary());
  EXPECT_EQ(loaded.config.at("note"), "x");
  const auto before = ScorePairsInference(*r.model, setup_->val, *setup_->cache);
  const auto after = ScorePairsInference(*loaded.model, setup_->val, *setup_->cache);
  EXPECT_EQ(before, after);
  const auto labels = Labels(setup_->val);
  EXPECT_EQ(ComputeMetrics(before, labels, 0.5).f1, ComputeMetrics(after, labels, 0.5).f1);
}

TEST_F(TrainerTest, CorruptCheckpointIsRejected) {
  const TrainResult r =
      Train(setup_->train, setup_->val, *setup_->cache, TinyModel(), FewEpochs(1));
  const std::filesystem::path path = ScratchDir("trainer_corrupt") / "m.ckpt";
  SaveModel(path, *r.model, setup_->cache->vocabulary());
  std::string bytes = ReadFileBytes(path);
  bytes[bytes.size() - 3] ^= 0x40;
  WriteFileBytes(path, bytes);
  try {
    LoadModel(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChecksumMismatch);
  }
}

TEST_F(TrainerTest, PredictThresholdExtremes) {
  MatchModel model(TinyModel(), 2);
  const Prediction all = Predict(model, setup_->test, *setup_->cache, 0.0);
  for (int d : all.decisions) EXPECT_EQ(d, 1);
  const Prediction none = Predict(model, setup_->test, *setup_->cache, 1.0 + 1e-9);
  for (int d : none.decisions) EXPECT_EQ(d, 0);
  EXPECT_EQ(all.scores, none.scores);
}

TEST_F(TrainerTest, EmptyPairsAreRejected) {
  try {
    Train({}, setup_->val, *setup_->cache, TinyModel(), FewEpochs(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
}

TEST_F(TrainerTest, LossMostlyDecreasesOverFirstEpochs) {
  // Default architecture and learning rate; dropout off so that the loss
  // curve reflects the optimizer only.
  TrainConfig t;
  t.max_epochs = 10;
  t.patience = 0;
  t.dropout_p = 0.0;
  const TrainResult r = Train(setup_->train, setup_->val, *setup_->cache, ModelConfig{}, t);
  ASSERT_EQ(r.report.epochs.size(), 10u);
  int increases = 0;
  for (std::size_t e = 1; e < r.report.epochs.size(); ++e) {
    if (r.report.epochs[e].train_loss > r.report.epochs[e - 1].train_loss) ++increases;
  }
  EXPECT_LE(increases, 2);
  EXPECT_LT(r.report.epochs.back().train_loss, r.report.epochs.front().train_loss);
}

TEST(TrainConfigTest, ValidationNamesField) {
  TrainConfig t;
  t.learning_rate = -1;
  try {
    t.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("learning_rate"), std::string::npos);
  }
  t = TrainConfig{};
  t.batch_size = 0;
  try {
    t.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("batch_size"), std::string::npos);
  }
}

TEST(TrainConfigTest, JsonRoundTrip) {
  TrainConfig t;
  t.learning_rate = 1e-3;
  t.batch_size = 7;
  t.seed = 99;
  t.dropout_p = 0.25;
  const TrainConfig back = TrainConfig::FromJson(t.ToJson());
  EXPECT_EQ(back.ToJson(), t.ToJson());
}

}  // namespace
}  // namespace gbm
