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

#ifndef GBM_MODEL_H_
#define GBM_MODEL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gbm/ad/ops.h"
#include "gbm/ad/tape.h"
#include "gbm/program_graph.h"
#include "gbm/random.h"
#include "gbm/tokenizer.h"
#include "json.hpp"

namespace gbm {

struct ModelConfig {
  std::size_t vocab_size = kMaxVocabularySize;
  std::size_t token_embed_dim = 128;
  std::size_t hidden_dim = 256;
  std::size_t num_layers = 5;
  // Slope of the activations after each layer and inside the head.
  double leaky_slope = 0.01;
  // Slope of the LeakyReLU inside the attention score.
  double attention_slope = 0.2;
  double dropout_p = 0.5;
  std::size_t max_position = 32;
  FeatureMode feature_mode = FeatureMode::kFullText;

  // Throws Error(kInvalidArgument) naming the offending field.
  void Validate() const;
  nlohmann::json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

// Per-relation edge lists in structure-of-arrays form.
struct RelationEdges {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  std::vector<std::size_t> position;
};

// Model-ready view of one graph: token ids plus edges split by relation.
struct GraphInput {
  std::size_t num_nodes = 0;
  std::size_t token_length = 0;
  std::vector<int> token_ids;  // [num_nodes x token_length]
  std::array<RelationEdges, kNumRelations> relations;
};

// `graph` must have token_ids of equal length on every node.
GraphInput MakeGraphInput(const ProgramGraph& graph);

// Disjoint union of several graphs, with one self-loop (position 0) per node
// and relation appended after the real edges.
struct GraphBatch {
  std::size_t num_nodes = 0;
  std::size_t num_graphs = 0;
  std::size_t token_length = 0;
  std::vector<int> token_ids;
  std::array<RelationEdges, kNumRelations> relations;
  std::vector<std::size_t> graph_of_node;
  ad::Tensor inverse_graph_size;  // [num_graphs]
};

GraphBatch MakeGraphBatch(const std::vector<const GraphInput*>& graphs);

// Parameters of one model, laid out by name:
//   embed.tokens [V x E], embed.proj.weight [E x D], embed.proj.bias [D]
//   conv{l}.{control,data,call}.{w_src,w_dst} [D x D], .att [D x 1],
//     .pos [P x D]
//   conv{l}.norm.{gain,bias} [D]
//   pool.context [D x D]
//   head.fc1.weight [2D x D], head.fc1.bias [D], head.norm.{gain,bias} [D],
//   head.fc2.weight [D x 1], head.fc2.bias [1]
class MatchModel {
 public:
  // He-normal weights (std sqrt(2 / fan_in)), unit norm gains, zero biases.
  MatchModel(ModelConfig config, std::uint64_t seed);
  // Parameters supplied externally, e.g. from a checkpoint. Shapes are
  // checked against the config.
  MatchModel(ModelConfig config, ad::ParameterStore params);

  const ModelConfig& config() const { return config_; }
  ad::ParameterStore& parameters() { return params_; }
  const ad::ParameterStore& parameters() const { return params_; }

  // Parameter names and shapes the config implies, in creation order.
  static std::vector<std::pair<std::string, ad::Shape>> ParameterLayout(
      const ModelConfig& config);

 private:
  ModelConfig config_;
  ad::ParameterStore params_;
};

// All model parameters bound to one tape.
class BoundModel {
 public:
  BoundModel(MatchModel& model, ad::Tape& tape);

  const ModelConfig& config() const { return config_; }
  ad::Var operator[](const std::string& name) const;

  // [num_nodes x D]: token max-embedding followed by the input projection.
  ad::Var EmbedNodes(const GraphBatch& batch) const;
  // One heterogeneous attention layer: per-relation GATv2 convolutions,
  // element-wise max across relations, layer norm, LeakyReLU.
  ad::Var HeteroLayer(ad::Var h, const GraphBatch& batch, std::size_t layer) const;
  // [num_graphs x D]: context c = tanh(mean(h) W_c), node weight
  // sigmoid(h . c), weighted node sum per graph.
  ad::Var AttentionPool(ad::Var h, const GraphBatch& batch) const;
  // Full graph encoder: EmbedNodes, all layers, AttentionPool.
  ad::Var EmbedGraphs(const GraphBatch& batch) const;
  // Scores [B] for embedding rows [B x D] (source side) and [B x D]
  // (binary side).
  ad::Var PredictPairs(ad::Var source, ad::Var binary, bool train, Rng& rng) const;

 private:
  ModelConfig config_;
  ad::Tape* tape_;
  std::unordered_map<std::string, ad::Var> vars_;
};

// Scores pairs of graphs drawn from `graphs`: pair k is
// (graphs[source_index[k]], graphs[binary_index[k]]).
ad::Var ScorePairs(const BoundModel& model, const std::vector<const GraphInput*>& graphs,
                   const std::vector<std::size_t>& source_index,
                   const std::vector<std::size_t>& binary_index, bool train, Rng& rng);

// Convenience for one pair in inference mode.
double ScorePair(MatchModel& model, const GraphInput& source, const GraphInput& binary);

}  // namespace gbm

#endif  // GBM_MODEL_H_
