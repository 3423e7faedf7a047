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

#include <algorithm>
#include <cmath>
#include <set>

#include "gbm/status.h"

namespace gbm {

using ad::Shape;
using ad::Tensor;
using ad::Var;

namespace {

const std::set<std::string>& ModelConfigKeys() {
  static const std::set<std::string> keys = {
      "vocab_size",      "token_embed_dim", "hidden_dim",
      "num_layers",      "leaky_slope",     "attention_slope",
      "dropout_p",       "max_position",    "feature_mode"};
  return keys;
}

[[noreturn]] void BadField(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidArgument, "model." + field + ": " + why);
}

std::string LayerPrefix(std::size_t layer) {
  return "conv" + std::to_string(layer) + ".";
}

}  // namespace

void ModelConfig::Validate() const {
  if (vocab_size < 3) BadField("vocab_size", "must be at least 3");
  if (token_embed_dim == 0) BadField("token_embed_dim", "must be positive");
  if (hidden_dim == 0) BadField("hidden_dim", "must be positive");
  if (num_layers == 0) BadField("num_layers", "must be at least 1");
  if (max_position == 0) BadField("max_position", "must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) BadField("dropout_p", "must be in [0, 1)");
  if (!std::isfinite(leaky_slope)) BadField("leaky_slope", "must be finite");
  if (!std::isfinite(attention_slope)) BadField("attention_slope", "must be finite");
}

nlohmann::json ModelConfig::ToJson() const {
  return {{"vocab_size", vocab_size},
          {"token_embed_dim", token_embed_dim},
          {"hidden_dim", hidden_dim},
          {"num_layers", num_layers},
          {"leaky_slope", leaky_slope},
          {"attention_slope", attention_slope},
          {"dropout_p", dropout_p},
          {"max_position", max_position},
          {"feature_mode", FeatureModeName(feature_mode)}};
}

ModelConfig ModelConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "model: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!ModelConfigKeys().contains(key)) BadField(key, "unknown field");
  }
  ModelConfig c;
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      BadField(key, "wrong type");
    }
  };
  read("vocab_size", c.vocab_size);
  read("token_embed_dim", c.token_embed_dim);
  read("hidden_dim", c.hidden_dim);
  read("num_layers", c.num_layers);
  read("leaky_slope", c.leaky_slope);
  read("attention_slope", c.attention_slope);
  read("dropout_p", c.dropout_p);
  read("max_position", c.max_position);
  if (j.contains("feature_mode")) {
    if (!j["feature_mode"].is_string()) BadField("feature_mode", "wrong type");
    c.feature_mode = ParseFeatureMode(j["feature_mode"].get<std::string>());
  }
  c.Validate();
  return c;
}

GraphInput MakeGraphInput(const ProgramGraph& graph) {
  GraphInput in;
  in.num_nodes = graph.nodes.size();
  in.token_length = graph.nodes.empty() ? 0 : graph.nodes.front().token_ids.size();
  in.token_ids.reserve(in.num_nodes * in.token_length);
  for (const GraphNode& node : graph.nodes) {
    if (node.token_ids.size() != in.token_length || in.token_length == 0) {
      throw Error(ErrorCode::kShapeMismatch,
                  graph.source_path + ": nodes are not uniformly tokenized");
    }
    in.token_ids.insert(in.token_ids.end(), node.token_ids.begin(), node.token_ids.end());
  }
  for (const GraphEdge& e : graph.edges) {
    RelationEdges& r = in.relations[static_cast<std::size_t>(e.relation)];
    r.src.push_back(e.src);
    r.dst.push_back(e.dst);
    r.position.push_back(e.position);
  }
  return in;
}

GraphBatch MakeGraphBatch(const std::vector<const GraphInput*>& graphs) {
  if (graphs.empty()) throw Error(ErrorCode::kEmptyBatch, "no graphs to batch");
  GraphBatch b;
  b.num_graphs = graphs.size();
  b.token_length = graphs.front()->token_length;
  b.inverse_graph_size = Tensor({graphs.size()});
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const GraphInput& in = *graphs[g];
    if (in.token_length != b.token_length) {
      throw Error(ErrorCode::kShapeMismatch, "graphs use different token lengths");
    }
    if (in.num_nodes == 0) throw Error(ErrorCode::kShapeMismatch, "graph without nodes");
    const std::size_t offset = b.num_nodes;
    b.token_ids.insert(b.token_ids.end(), in.token_ids.begin(), in.token_ids.end());
    for (std::size_t r = 0; r < kNumRelations; ++r) {
      const RelationEdges& from = in.relations[r];
      RelationEdges& to = b.relations[r];
      for (std::size_t e = 0; e < from.src.size(); ++e) {
        to.src.push_back(from.src[e] + offset);
        to.dst.push_back(from.dst[e] + offset);
        to.position.push_back(from.position[e]);
      }
    }
    b.graph_of_node.insert(b.graph_of_node.end(), in.num_nodes, g);
    b.inverse_graph_size[g] = 1.0 / static_cast<double>(in.num_nodes);
    b.num_nodes += in.num_nodes;
  }
  for (RelationEdges& r : b.relations) {
    for (std::size_t i = 0; i < b.num_nodes; ++i) {
      r.src.push_back(i);
      r.dst.push_back(i);
      r.position.push_back(0);
    }
  }
  return b;
}

std::vector<std::pair<std::string, Shape>> MatchModel::ParameterLayout(
    const ModelConfig& c) {
  const std::size_t d = c.hidden_dim;
  std::vector<std::pair<std::string, Shape>> layout = {
      {"embed.tokens", {c.vocab_size, c.token_embed_dim}},
      {"embed.proj.weight", {c.token_embed_dim, d}},
      {"embed.proj.bias", {d}},
  };
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    for (std::size_t r = 0; r < kNumRelations; ++r) {
      const std::string p =
          LayerPrefix(l) + std::string(RelationName(static_cast<Relation>(r))) + ".";
      layout.push_back({p + "w_src", {d, d}});
      layout.push_back({p + "w_dst", {d, d}});
      layout.push_back({p + "att", {d, 1}});
      layout.push_back({p + "pos", {c.max_position, d}});
    }
    layout.push_back({LayerPrefix(l) + "norm.gain", {d}});
    layout.push_back({LayerPrefix(l) + "norm.bias", {d}});
  }
  layout.push_back({"pool.context", {d, d}});
  layout.push_back({"head.fc1.weight", {2 * d, d}});
  layout.push_back({"head.fc1.bias", {d}});
  layout.push_back({"head.norm.gain", {d}});
  layout.push_back({"head.norm.bias", {d}});
  layout.push_back({"head.fc2.weight", {d, 1}});
  layout.push_back({"head.fc2.bias", {1}});
  return layout;
}

MatchModel::MatchModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.Validate();
  Rng rng(seed);
  for (auto& [name, shape] : ParameterLayout(config_)) {
    Tensor t(shape);
    if (name.ends_with(".gain")) {
      std::fill(t.data.begin(), t.data.end(), 1.0);
    } else if (name == "embed.tokens") {
      // Token rows act as inputs rather than weights; unit variance keeps
      // distinct tokens well separated after the max reduction.
      for (double& v : t.data) v = rng.Normal();
    } else if (shape.size() == 2) {
      const double std = std::sqrt(2.0 / static_cast<double>(shape[0]));
      for (double& v : t.data) v = std * rng.Normal();
    }
    params_.Add(name, std::move(t));
  }
}

MatchModel::MatchModel(ModelConfig config, ad::ParameterStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.Validate();
  const auto layout = ParameterLayout(config_);
  if (layout.size() != params_.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "expected " + std::to_string(layout.size()) + " parameters, got " +
                    std::to_string(params_.size()));
  }
  for (const auto& [name, shape] : layout) {
    if (!params_.Contains(name)) {
      throw Error(ErrorCode::kShapeMismatch, "missing parameter " + name);
    }
    if (params_.Get(name).value.shape != shape) {
      throw Error(ErrorCode::kShapeMismatch,
                  name + ": expected " + ad::ShapeToString(shape) + ", got " +
                      ad::ShapeToString(params_.Get(name).value.shape));
    }
  }
}

BoundModel::BoundModel(MatchModel& model, ad::Tape& tape)
    : config_(model.config()), tape_(&tape) {
  for (ad::Parameter& p : model.parameters()) vars_.emplace(p.name, tape.Bind(p));
}

Var BoundModel::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw Error(ErrorCode::kInvalidArgument, "no parameter " + name);
  return it->second;
}

Var BoundModel::EmbedNodes(const GraphBatch& batch) const {
  Var x = ad::EmbeddingMax((*this)["embed.tokens"], batch.token_ids,
                           batch.token_length, kPadId);
  return ad::Add(ad::MatMul(x, (*this)["embed.proj.weight"]),
                 (*this)["embed.proj.bias"]);
}

Var BoundModel::HeteroLayer(Var h, const GraphBatch& batch, std::size_t layer) const {
  std::vector<Var> outputs;
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    const std::string p =
        LayerPrefix(layer) + std::string(RelationName(static_cast<Relation>(r))) + ".";
    const RelationEdges& edges = batch.relations[r];
    std::vector<std::size_t> pos(edges.position.size());
    for (std::size_t e = 0; e < pos.size(); ++e) {
      pos[e] = std::min(edges.position[e], config_.max_position - 1);
    }
    outputs.push_back(ad::GatV2Aggregate(
        ad::MatMul(h, (*this)[p + "w_src"]), ad::MatMul(h, (*this)[p + "w_dst"]),
        (*this)[p + "pos"], (*this)[p + "att"], edges.src, edges.dst, pos,
        config_.attention_slope));
  }
  Var fused = ad::MaxOverAxis(ad::Stack(outputs), 0);
  const std::string norm = LayerPrefix(layer) + "norm.";
  fused = ad::LayerNorm(fused, (*this)[norm + "gain"], (*this)[norm + "bias"]);
  return ad::LeakyRelu(fused, config_.leaky_slope);
}

Var BoundModel::AttentionPool(Var h, const GraphBatch& batch) const {
  const std::size_t g = batch.num_graphs;
  const std::size_t d = config_.hidden_dim;
  Var mean = ad::ScaleRows(ad::SegmentSum(h, batch.graph_of_node, g),
                           tape_->Constant(batch.inverse_graph_size));
  Var context = ad::Tanh(ad::MatMul(mean, (*this)["pool.context"]));
  Var per_node = ad::GatherRows(context, batch.graph_of_node);
  Tensor ones({d, 1});
  std::fill(ones.data.begin(), ones.data.end(), 1.0);
  Var dots = ad::MatMul(ad::Mul(h, per_node), tape_->Constant(std::move(ones)));
  Var weights = ad::Sigmoid(ad::Reshape(dots, {batch.num_nodes}));
  return ad::SegmentSum(ad::ScaleRows(h, weights), batch.graph_of_node, g);
}

Var BoundModel::EmbedGraphs(const GraphBatch& batch) const {
  Var h = EmbedNodes(batch);
  for (std::size_t l = 0; l < config_.num_layers; ++l) h = HeteroLayer(h, batch, l);
  return AttentionPool(h, batch);
}

Var BoundModel::PredictPairs(Var source, Var binary, bool train, Rng& rng) const {
  const std::size_t b = source.shape().at(0);
  Var x = ad::Concat({source, binary}, 1);
  x = ad::Add(ad::MatMul(x, (*this)["head.fc1.weight"]), (*this)["head.fc1.bias"]);
  x = ad::LayerNorm(x, (*this)["head.norm.gain"], (*this)["head.norm.bias"]);
  x = ad::LeakyRelu(x, config_.leaky_slope);
  x = ad::Dropout(x, config_.dropout_p, train, rng);
  x = ad::Add(ad::MatMul(x, (*this)["head.fc2.weight"]), (*this)["head.fc2.bias"]);
  return ad::Reshape(ad::Sigmoid(x), {b});
}

Var ScorePairs(const BoundModel& model, const std::vector<const GraphInput*>& graphs,
               const std::vector<std::size_t>& source_index,
               const std::vector<std::size_t>& binary_index, bool train, Rng& rng) {
  if (source_index.empty() || source_index.size() != binary_index.size()) {
    throw Error(ErrorCode::kEmptyBatch, "pair index lists are empty or unequal");
  }
  try {
    const GraphBatch batch = MakeGraphBatch(graphs);
    Var embeddings = model.EmbedGraphs(batch);
    return model.PredictPairs(ad::GatherRows(embeddings, source_index),
                              ad::GatherRows(embeddings, binary_index), train, rng);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFiniteInput) throw;
    throw Error(ErrorCode::kNonFiniteScore, e.what());
  }
}

double ScorePair(MatchModel& model, const GraphInput& source, const GraphInput& binary) {
  ad::Tape tape;
  BoundModel bound(model, tape);
  Rng rng(0);
  Var score = ScorePairs(bound, {&source, &binary}, {0}, {1}, false, rng);
  return score.value()[0];
}

}  // namespace gbm
