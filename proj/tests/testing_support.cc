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

#include "testing_support.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gbm/ad/ops.h"
#include "gbm/ir_module.h"
#include "gbm/synthetic_corpus.h"

namespace gbm {

using ad::GradCheck;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Tensor RandomTensor(Rng& rng, Shape shape, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = scale * rng.Normal();
  return t;
}

// Projects an arbitrary tensor onto a scalar with fixed random weights, so
// that every output element receives a distinct, order-one upstream
// gradient.
Var Project(Tape& tape, Var v, std::uint64_t seed) {
  Rng rng(seed);
  return ad::Sum(ad::Mul(v, tape.Constant(RandomTensor(rng, v.shape()))));
}

std::vector<std::size_t> RandomIndices(Rng& rng, std::size_t count, std::size_t bound) {
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = rng.Index(bound);
  return out;
}

}  // namespace

GraphInput RandomGraphInput(Rng& rng, std::size_t nodes, std::size_t vocab_size,
                            std::size_t token_length, std::size_t max_position) {
  GraphInput g;
  g.num_nodes = nodes;
  g.token_length = token_length;
  g.token_ids.assign(nodes * token_length, kPadId);
  for (std::size_t n = 0; n < nodes; ++n) {
    const std::size_t used = 1 + rng.Index(token_length);
    for (std::size_t t = 0; t < used; ++t) {
      g.token_ids[n * token_length + t] = static_cast<int>(1 + rng.Index(vocab_size - 1));
    }
  }
  for (RelationEdges& rel : g.relations) {
    const std::size_t edges = nodes + rng.Index(2 * nodes);
    for (std::size_t e = 0; e < edges; ++e) {
      rel.src.push_back(rng.Index(nodes));
      rel.dst.push_back(rng.Index(nodes));
      // Occasionally beyond max_position to exercise clipping.
      rel.position.push_back(rng.Index(max_position + 3));
    }
  }
  return g;
}

GraphInput PermuteNodes(const GraphInput& g, const std::vector<std::size_t>& perm) {
  GraphInput out = g;
  for (std::size_t n = 0; n < g.num_nodes; ++n) {
    std::copy_n(g.token_ids.begin() + static_cast<std::ptrdiff_t>(n * g.token_length),
                g.token_length,
                out.token_ids.begin() + static_cast<std::ptrdiff_t>(perm[n] * g.token_length));
  }
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    for (std::size_t e = 0; e < g.relations[r].src.size(); ++e) {
      out.relations[r].src[e] = perm[g.relations[r].src[e]];
      out.relations[r].dst[e] = perm[g.relations[r].dst[e]];
    }
  }
  return out;
}

GraphInput ShuffleEdges(const GraphInput& g, Rng& rng) {
  GraphInput out = g;
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    std::vector<std::size_t> order(g.relations[r].src.size());
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(order);
    for (std::size_t e = 0; e < order.size(); ++e) {
      out.relations[r].src[e] = g.relations[r].src[order[e]];
      out.relations[r].dst[e] = g.relations[r].dst[order[e]];
      out.relations[r].position[e] = g.relations[r].position[order[e]];
    }
  }
  return out;
}

ModelConfig SmallModelConfig() {
  ModelConfig c;
  c.vocab_size = 32;
  c.token_embed_dim = 6;
  c.hidden_dim = 8;
  c.num_layers = 5;
  c.max_position = 4;
  c.dropout_p = 0.0;
  return c;
}

std::vector<NamedGradResult> PrimitiveGradSuite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<NamedGradResult> out;
  auto check = [&](const std::string& name, const ad::ScalarFn& f,
                   const std::vector<Tensor>& inputs) {
    out.push_back({name, GradCheck(f, inputs)});
  };
  const std::uint64_t proj = rng.NextU64();

  check("MatMul",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::MatMul(x[0], x[1]), proj); },
        {RandomTensor(rng, {3, 4}), RandomTensor(rng, {4, 5})});
  check("Add",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Add(x[0], x[1]), proj); },
        {RandomTensor(rng, {3, 4}), RandomTensor(rng, {3, 4})});
  check("AddBroadcast",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Add(x[0], x[1]), proj); },
        {RandomTensor(rng, {2, 3, 4}), RandomTensor(rng, {4})});
  check("Sub",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Sub(x[0], x[1]), proj); },
        {RandomTensor(rng, {3, 4}), RandomTensor(rng, {3, 4})});
  check("Mul",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Mul(x[0], x[1]), proj); },
        {RandomTensor(rng, {3, 4}), RandomTensor(rng, {3, 4})});
  check("Scale",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Scale(x[0], -1.7), proj); },
        {RandomTensor(rng, {5})});
  check("LeakyRelu",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::LeakyRelu(x[0], 0.01), proj);
        },
        {RandomTensor(rng, {4, 4})});
  check("Sigmoid",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Sigmoid(x[0]), proj); },
        {RandomTensor(rng, {4, 4}, 2.0)});
  check("Tanh",
        [&](Tape& t, const std::vector<Var>& x) { return Project(t, ad::Tanh(x[0]), proj); },
        {RandomTensor(rng, {4, 4})});
  check("Sum", [&](Tape&, const std::vector<Var>& x) { return ad::Sum(x[0]); },
        {RandomTensor(rng, {3, 2})});
  check("Reshape",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::Reshape(x[0], {2, 6}), proj);
        },
        {RandomTensor(rng, {3, 4})});
  check("Concat0",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::Concat({x[0], x[1]}, 0), proj);
        },
        {RandomTensor(rng, {2, 3}), RandomTensor(rng, {4, 3})});
  check("Concat1",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::Concat({x[0], x[1]}, 1), proj);
        },
        {RandomTensor(rng, {3, 2}), RandomTensor(rng, {3, 4})});
  check("Stack",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::Stack({x[0], x[1], x[2]}), proj);
        },
        {RandomTensor(rng, {2, 3}), RandomTensor(rng, {2, 3}), RandomTensor(rng, {2, 3})});
  check("MaxOverAxis0",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::MaxOverAxis(x[0], 0), proj);
        },
        {RandomTensor(rng, {3, 4, 2})});
  check("MaxOverAxis1",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::MaxOverAxis(x[0], 1), proj);
        },
        {RandomTensor(rng, {3, 4, 2})});
  check("MeanOverAxis",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::MeanOverAxis(x[0], 1), proj);
        },
        {RandomTensor(rng, {3, 4})});

  const auto rows = RandomIndices(rng, 7, 4);
  check("GatherRows",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::GatherRows(x[0], rows), proj);
        },
        {RandomTensor(rng, {4, 3})});
  check("ScaleRows",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::ScaleRows(x[0], x[1]), proj);
        },
        {RandomTensor(rng, {5, 3}), RandomTensor(rng, {5})});

  std::vector<std::size_t> segments = RandomIndices(rng, 9, 4);
  segments[0] = 3;  // keep the last segment non-empty
  check("SegmentSum",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::SegmentSum(x[0], segments, 5), proj);
        },
        {RandomTensor(rng, {9, 3})});
  check("SegmentMax",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::SegmentMax(x[0], segments, 5), proj);
        },
        {RandomTensor(rng, {9, 3})});
  check("SegmentSoftmax",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::SegmentSoftmax(x[0], segments, 5), proj);
        },
        {RandomTensor(rng, {9})});
  check("LayerNorm",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::LayerNorm(x[0], x[1], x[2]), proj);
        },
        {RandomTensor(rng, {3, 5}), RandomTensor(rng, {5}), RandomTensor(rng, {5})});
  const std::uint64_t dropout_seed = rng.NextU64();
  check("Dropout",
        [&](Tape& t, const std::vector<Var>& x) {
          Rng mask(dropout_seed);  // same mask on every evaluation
          return Project(t, ad::Dropout(x[0], 0.3, true, mask), proj);
        },
        {RandomTensor(rng, {4, 4})});
  Tensor labels({6});
  for (double& y : labels.data) y = static_cast<double>(rng.Index(2));
  check("BceLoss",
        [&](Tape&, const std::vector<Var>& x) { return ad::BceLoss(ad::Sigmoid(x[0]), labels); },
        {RandomTensor(rng, {6})});

  const std::size_t nodes = 6, dim = 4, positions = 3;
  const auto src = RandomIndices(rng, 14, nodes);
  auto dst = RandomIndices(rng, 14, nodes);
  dst[0] = nodes - 1;
  const auto pos = RandomIndices(rng, 14, positions);
  check("GatV2Aggregate",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::GatV2Aggregate(x[0], x[1], x[2], x[3], src, dst, pos, 0.2), proj);
        },
        {RandomTensor(rng, {nodes, dim}), RandomTensor(rng, {nodes, dim}),
         RandomTensor(rng, {positions, dim}), RandomTensor(rng, {dim, 1})});

  std::vector<int> ids(5 * 3, 0);
  for (std::size_t n = 0; n < 4; ++n) {  // node 4 stays all padding
    for (std::size_t k = 0; k < 1 + rng.Index(3); ++k) ids[n * 3 + k] = 1 + static_cast<int>(rng.Index(7));
  }
  check("EmbeddingMax",
        [&](Tape& t, const std::vector<Var>& x) {
          return Project(t, ad::EmbeddingMax(x[0], ids, 3, 0), proj);
        },
        {RandomTensor(rng, {8, 4})});
  return out;
}

ad::GradCheckResult EndToEndGradCheck(std::uint64_t seed) {
  Rng rng(seed);
  const ModelConfig config = SmallModelConfig();
  MatchModel model(config, DeriveSeed(seed, 0));
  const GraphInput a = RandomGraphInput(rng, 5 + rng.Index(6), config.vocab_size, 4, 4);
  const GraphInput b = RandomGraphInput(rng, 5 + rng.Index(6), config.vocab_size, 4, 4);
  const std::vector<const GraphInput*> graphs = {&a, &b};
  return ad::GradCheckParameters(
      [&](Tape& tape) {
        BoundModel bound(model, tape);
        Rng dropout(0);
        return ad::Sum(ScorePairs(bound, graphs, {0}, {1}, true, dropout));
      },
      model.parameters(), 1e-5, 12);
}

double InvarianceMaxDeviation(std::size_t num_graphs, std::uint64_t seed) {
  Rng rng(seed);
  ModelConfig config = SmallModelConfig();
  config.hidden_dim = 16;
  MatchModel model(config, DeriveSeed(seed, 0));
  double worst = 0.0;
  for (std::size_t k = 0; k < num_graphs; ++k) {
    const GraphInput a = RandomGraphInput(rng, 5 + rng.Index(46), config.vocab_size, 5, 4);
    const GraphInput b = RandomGraphInput(rng, 5 + rng.Index(46), config.vocab_size, 5, 4);
    const double base = ScorePair(model, a, b);
    std::vector<std::size_t> perm_a(a.num_nodes), perm_b(b.num_nodes);
    std::iota(perm_a.begin(), perm_a.end(), 0);
    std::iota(perm_b.begin(), perm_b.end(), 0);
    rng.Shuffle(perm_a);
    rng.Shuffle(perm_b);
    const double variants[] = {
        ScorePair(model, PermuteNodes(a, perm_a), b),
        ScorePair(model, a, PermuteNodes(b, perm_b)),
        ScorePair(model, ShuffleEdges(a, rng), ShuffleEdges(b, rng)),
        ScorePair(model, ShuffleEdges(PermuteNodes(a, perm_a), rng), PermuteNodes(b, perm_b)),
    };
    for (double v : variants) worst = std::max(worst, std::abs(v - base));
  }
  return worst;
}

SyntheticSetup MakeSyntheticSetup(std::uint64_t seed, std::size_t variants_per_side,
                                  FeatureMode mode) {
  CorpusManifest manifest;
  std::map<std::string, ProgramGraph> graphs;
  for (const SyntheticFile& f : GenerateSyntheticCorpus(seed, variants_per_side)) {
    graphs[f.relative_path] =
        BuildGraph(ParseModule(f.text, f.relative_path), f.origin, f.language);
    manifest.push_back({f.relative_path, f.task, f.language, f.origin});
  }
  SplitSpec spec;
  spec.seed = seed;
  const ManifestSplit split = SplitByTask(manifest, spec);
  std::vector<const ProgramGraph*> train_graphs;
  for (const ManifestRecord& r : split.train) train_graphs.push_back(&graphs.at(r.graph_path));
  SyntheticSetup setup;
  setup.cache = std::make_unique<GraphCache>(
      TrainVocabulary(train_graphs, kMaxVocabularySize, mode));
  for (auto& [path, graph] : graphs) setup.cache->Add(path, graph);
  const RecordFilter a = MakeSideFilter(Origin::kSource);
  const RecordFilter b = MakeSideFilter(Origin::kBinary);
  setup.train = GeneratePairs(split.train, a, b, DeriveSeed(seed, 100));
  setup.val = GeneratePairs(split.val, a, b, DeriveSeed(seed, 101));
  setup.test = GeneratePairs(split.test, a, b, DeriveSeed(seed, 102));
  return setup;
}

}  // namespace gbm
