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

#ifndef GBM_TRAINER_H_
#define GBM_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gbm/ad/tape.h"
#include "gbm/metrics.h"
#include "gbm/model.h"
#include "gbm/pair_dataset.h"
#include "gbm/tokenizer.h"
#include "json.hpp"

namespace gbm {

// Loads graph files on first use, tokenizes them and keeps the model input.
class GraphCache {
 public:
  // Relative paths are resolved against `base_dir`.
  GraphCache(TokenVocabulary vocab, std::filesystem::path base_dir = {});

  // Registers an in-memory graph under `path` (tokenized on insertion).
  void Add(const std::string& path, ProgramGraph graph);
  const GraphInput& Get(const std::string& path);
  std::size_t NodeCount(const std::string& path) { return Get(path).num_nodes; }
  const TokenVocabulary& vocabulary() const { return tokenizer_.vocabulary(); }

 private:
  Tokenizer tokenizer_;
  std::filesystem::path base_dir_;
  std::map<std::string, std::unique_ptr<GraphInput>> graphs_;
};

struct TrainConfig {
  double learning_rate = 6.6e-5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  // Epochs without a validation improvement before stopping.
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  // Overrides ModelConfig::dropout_p for the trained model.
  double dropout_p = 0.5;
  double threshold = 0.5;
  // Runs the loop without optimizer updates (diagnostics only).
  bool freeze_parameters = false;

  // Throws Error(kInvalidArgument) naming the offending field.
  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  MetricReport train;
  double val_loss = 0.0;
  MetricReport val;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_f1 = 0.0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  std::string checkpoint_path;
  double wall_time_seconds = 0.0;

  // Per-epoch table for terminals.
  std::string ToText() const;
  nlohmann::json ToJson() const;
};

struct TrainResult {
  TrainReport report;
  // Parameters of the best validation epoch.
  std::unique_ptr<MatchModel> model;
};

// Mini-batch training with mean BCE per batch and Adam. After every epoch
// the model is scored in inference mode on the training and validation
// pairs; the epoch with the best validation F1 (ties: lower validation
// loss) is kept.
// `initial_parameters`, when given, replaces the seeded initialization.
// Throws Error(kEmptyBatch) for empty pair lists and Error(kNonFiniteLoss)
// naming the pairs of a batch whose scores were not finite.
TrainResult Train(const std::vector<PairSample>& train_pairs,
                  const std::vector<PairSample>& val_pairs, GraphCache& graphs,
                  ModelConfig model_config, const TrainConfig& train_config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {},
                  const ad::ParameterStore* initial_parameters = nullptr);

// Graphs embedded per inference batch.
inline constexpr std::size_t kInferenceGraphBatch = 64;

// Inference-mode scores for `pairs`. Each distinct graph is embedded once.
std::vector<double> ScorePairsInference(MatchModel& model, const std::vector<PairSample>& pairs,
                                        GraphCache& graphs);

// Mean binary cross entropy of scores against labels, with the same
// clamping as the training loss.
double MeanBce(const std::vector<double>& scores, const std::vector<int>& labels);

std::vector<int> Labels(const std::vector<PairSample>& pairs);

struct Prediction {
  std::vector<double> scores;
  std::vector<int> decisions;
};

// decision = score >= threshold.
Prediction Predict(MatchModel& model, const std::vector<PairSample>& pairs,
                   GraphCache& graphs, double threshold);

// Checkpoint config holds the model config and the vocabulary, so a
// checkpoint alone is enough for inference.
void SaveModel(const std::filesystem::path& path, const MatchModel& model,
               const TokenVocabulary& vocab, const nlohmann::json& extra = nlohmann::json::object());

struct LoadedModel {
  std::unique_ptr<MatchModel> model;
  TokenVocabulary vocabulary;
  nlohmann::json config;
};

// Throws Error(kChecksumMismatch), Error(kVersionMismatch) or
// Error(kCorruptPayload).
LoadedModel LoadModel(const std::filesystem::path& path);

}  // namespace gbm

#endif  // GBM_TRAINER_H_
