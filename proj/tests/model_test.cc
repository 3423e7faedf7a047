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

#include "gbm/model.h"

#include <gtest/gtest.h>

#include "gbm/ad/ops.h"
#include "gbm/ir_module.h"
#include "gbm/io.h"
#include "gbm/status.h"
#include "gbm/tokenizer.h"
#include "test_util.h"
#include "testing_support.h"

namespace gbm {
namespace {

class EndToEndGradientTest : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(EndToEndGradientTest, PairScoreGradientMatchesCentralDifferences) {
  const ad::GradCheckResult r = EndToEndGradCheck(GetParam());
  EXPECT_LE(r.max_rel_error, 1e-3) << r.worst_location << ": analytic " << r.worst_analytic
                                   << " numeric " << r.worst_numeric;
  EXPECT_GT(r.checked, 100u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, EndToEndGradientTest, ::testing::Range<std::uint64_t>(0, 5));

TEST(ModelTest, ScoreIsInvariantToNodeOrderAndEdgeOrder) {
  EXPECT_LE(InvarianceMaxDeviation(20, 11), 1e-9);
}

TEST(ModelTest, ParameterLayoutMatchesConfig) {
  const ModelConfig c = SmallModelConfig();
  MatchModel model(c, 1);
  EXPECT_EQ(model.parameters().size(), MatchModel::ParameterLayout(c).size());
  // 3 embedding tensors, 14 per layer, 1 pool, 6 head.
  EXPECT_EQ(model.parameters().size(), 3 + 14 * c.num_layers + 1 + 6);
  EXPECT_EQ(model.parameters().Get("conv0.data.pos").value.shape,
            (ad::Shape{c.max_position, c.hidden_dim}));
  EXPECT_EQ(model.parameters().Get("head.fc1.weight").value.shape,
            (ad::Shape{2 * c.hidden_dim, c.hidden_dim}));
}

TEST(ModelTest, InitializationIsSeeded) {
  const ModelConfig c = SmallModelConfig();
  MatchModel a(c, 5), b(c, 5), other(c, 6);
  EXPECT_EQ(a.parameters().Get("pool.context").value, b.parameters().Get("pool.context").value);
  EXPECT_NE(a.parameters().Get("pool.context").value,
            other.parameters().Get("pool.context").value);
  EXPECT_EQ(a.parameters().Get("head.fc1.bias").value.data,
            std::vector<double>(c.hidden_dim, 0.0));
}

TEST(ModelTest, ScoreIsAProbabilityAndBatchingDoesNotChangeIt) {
  Rng rng(2);
  const ModelConfig c = SmallModelConfig();
  MatchModel model(c, 3);
  const GraphInput a = RandomGraphInput(rng, 9, c.vocab_size, 4, 4);
  const GraphInput b = RandomGraphInput(rng, 14, c.vocab_size, 4, 4);
  const GraphInput d = RandomGraphInput(rng, 6, c.vocab_size, 4, 4);
  const double single = ScorePair(model, a, b);
  EXPECT_GT(single, 0.0);
  EXPECT_LT(single, 1.0);
  ad::Tape tape;
  BoundModel bound(model, tape);
  Rng unused(0);
  ad::Var batched = ScorePairs(bound, {&d, &a, &b}, {0, 1, 1}, {2, 2, 0}, false, unused);
  EXPECT_NEAR(batched.value()[1], single, 1e-12);
}

TEST(ModelTest, BatchAddsOneSelfLoopPerNodeAndRelation) {
  Rng rng(4);
  const GraphInput a = RandomGraphInput(rng, 5, 16, 3, 4);
  const GraphInput b = RandomGraphInput(rng, 7, 16, 3, 4);
  const GraphBatch batch = MakeGraphBatch({&a, &b});
  EXPECT_EQ(batch.num_nodes, 12u);
  EXPECT_EQ(batch.num_graphs, 2u);
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    EXPECT_EQ(batch.relations[r].src.size(),
              a.relations[r].src.size() + b.relations[r].src.size() + 12);
  }
  EXPECT_EQ(batch.graph_of_node[5], 1u);
  EXPECT_DOUBLE_EQ(batch.inverse_graph_size[1], 1.0 / 7.0);
}

TEST(ModelTest, RealGraphsFlowThroughTheModel) {
  std::vector<ProgramGraph> graphs;
  for (const std::string& name : FixtureNames()) {
    graphs.push_back(BuildGraph(ParseModule(ReadFileBytes(FixturePath(name)), name)));
  }
  std::vector<const ProgramGraph*> pointers;
  for (const auto& g : graphs) pointers.push_back(&g);
  Tokenizer tokenizer(TrainVocabulary(pointers, 64, FeatureMode::kFullText));
  for (auto& g : graphs) tokenizer.EncodeGraph(g);
  ModelConfig c = SmallModelConfig();
  c.vocab_size = 64;
  MatchModel model(c, 9);
  const double s = ScorePair(model, MakeGraphInput(graphs[0]), MakeGraphInput(graphs[1]));
  EXPECT_TRUE(std::isfinite(s));
}

TEST(ModelConfigTest, ValidationNamesTheField) {
  ModelConfig c;
  c.hidden_dim = 0;
  try {
    c.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("hidden_dim"), std::string::npos);
  }
  nlohmann::json j = ModelConfig{}.ToJson();
  j["hiden_dim"] = 3;
  try {
    ModelConfig::FromJson(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("hiden_dim"), std::string::npos);
  }
}

TEST(ModelConfigTest, JsonRoundTrip) {
  ModelConfig c = SmallModelConfig();
  c.feature_mode = FeatureMode::kText;
  EXPECT_EQ(ModelConfig::FromJson(c.ToJson()), c);
}

}  // namespace
}  // namespace gbm
