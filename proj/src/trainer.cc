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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "gbm/ad/adam.h"
#include "gbm/ad/checkpoint.h"
#include "gbm/io.h"
#include "gbm/status.h"

namespace gbm {

using ad::Tensor;
using ad::Var;

GraphCache::GraphCache(TokenVocabulary vocab, std::filesystem::path base_dir)
    : tokenizer_(std::move(vocab)), base_dir_(std::move(base_dir)) {}

void GraphCache::Add(const std::string& path, ProgramGraph graph) {
  tokenizer_.EncodeGraph(graph);
  graphs_[path] = std::make_unique<GraphInput>(MakeGraphInput(graph));
}

const GraphInput& GraphCache::Get(const std::string& path) {
  if (auto it = graphs_.find(path); it != graphs_.end()) return *it->second;
  std::filesystem::path file(path);
  if (file.is_relative() && !base_dir_.empty()) file = base_dir_ / file;
  ProgramGraph graph = DeserializeGraph(ReadFileBytes(file));
  tokenizer_.EncodeGraph(graph);
  return *(graphs_[path] = std::make_unique<GraphInput>(MakeGraphInput(graph)));
}

namespace {

const std::set<std::string>& TrainConfigKeys() {
  static const std::set<std::string> keys = {
      "learning_rate", "batch_size", "max_epochs", "patience",         "seed",
      "dropout_p",     "threshold",  "freeze_parameters"};
  return keys;
}

[[noreturn]] void BadField(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidArgument, "train." + field + ": " + why);
}

// Distinct graphs referenced by `pairs`, in order of first use, and the
// per-pair indices into that list.
struct PairGraphs {
  std::vector<std::string> paths;
  std::vector<std::size_t> source_index;
  std::vector<std::size_t> binary_index;
};

template <typename PairRange>
PairGraphs CollectGraphs(const PairRange& pairs) {
  PairGraphs out;
  std::unordered_map<std::string, std::size_t> index;
  auto lookup = [&](const std::string& path) {
    auto [it, inserted] = index.try_emplace(path, out.paths.size());
    if (inserted) out.paths.push_back(path);
    return it->second;
  };
  for (const PairSample* p : pairs) {
    out.source_index.push_back(lookup(p->path_a));
    out.binary_index.push_back(lookup(p->path_b));
  }
  return out;
}

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    BadField("learning_rate", "must be positive");
  }
  if (batch_size == 0) BadField("batch_size", "must be at least 1");
  if (max_epochs == 0) BadField("max_epochs", "must be at least 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) BadField("dropout_p", "must be in [0, 1)");
  if (!std::isfinite(threshold)) BadField("threshold", "must be finite");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"max_epochs", max_epochs},       {"patience", patience},
          {"seed", seed},                   {"dropout_p", dropout_p},
          {"threshold", threshold},         {"freeze_parameters", freeze_parameters}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "train: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!TrainConfigKeys().contains(key)) BadField(key, "unknown field");
  }
  TrainConfig c;
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      BadField(key, "wrong type");
    }
  };
  read("learning_rate", c.learning_rate);
  read("batch_size", c.batch_size);
  read("max_epochs", c.max_epochs);
  read("patience", c.patience);
  read("seed", c.seed);
  read("dropout_p", c.dropout_p);
  read("threshold", c.threshold);
  read("freeze_parameters", c.freeze_parameters);
  c.Validate();
  return c;
}

std::string TrainReport::ToText() const {
  std::string out =
      "epoch  train_loss  train_f1  val_loss  val_p   val_r   val_f1\n";
  for (const EpochRecord& e : epochs) {
    char line[128];
    std::snprintf(line, sizeof(line), "%5zu  %10.6f  %8.4f  %8.6f  %6.4f  %6.4f  %6.4f%s\n",
                  e.epoch, e.train_loss, e.train.f1, e.val_loss, e.val.precision,
                  e.val.recall, e.val.f1, e.epoch == best_epoch ? "  *" : "");
    out += line;
  }
  out += "best epoch " + std::to_string(best_epoch) + ", val F1 " +
         Format("%.4f", best_val_f1) + (stopped_early ? " (early stop)" : "") + "\n";
  return out;
}

nlohmann::json TrainReport::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const EpochRecord& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"train", MetricReportToJson(e.train)},
                    {"val_loss", e.val_loss},
                    {"val", MetricReportToJson(e.val)}});
  }
  return {{"epochs", std::move(rows)},
          {"best_epoch", best_epoch},
          {"best_val_f1", best_val_f1},
          {"best_val_loss", best_val_loss},
          {"stopped_early", stopped_early},
          {"checkpoint", checkpoint_path},
          {"wall_time_seconds", wall_time_seconds}};
}

std::vector<int> Labels(const std::vector<PairSample>& pairs) {
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const PairSample& p : pairs) labels.push_back(p.label);
  return labels;
}

double MeanBce(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "scores and labels differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], ad::kBceClamp, 1.0 - ad::kBceClamp);
    total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(scores.size());
}

std::vector<double> ScorePairsInference(MatchModel& model, const std::vector<PairSample>& pairs,
                                        GraphCache& graphs) {
  if (pairs.empty()) return {};
  std::vector<const PairSample*> refs;
  for (const PairSample& p : pairs) refs.push_back(&p);
  const PairGraphs pg = CollectGraphs(refs);
  const std::size_t d = model.config().hidden_dim;

  Tensor embeddings({pg.paths.size(), d});
  for (std::size_t start = 0; start < pg.paths.size(); start += kInferenceGraphBatch) {
    const std::size_t end = std::min(pg.paths.size(), start + kInferenceGraphBatch);
    std::vector<const GraphInput*> chunk;
    for (std::size_t g = start; g < end; ++g) chunk.push_back(&graphs.Get(pg.paths[g]));
    ad::Tape tape;
    BoundModel bound(model, tape);
    const GraphBatch batch = MakeGraphBatch(chunk);
    const Tensor& rows = bound.EmbedGraphs(batch).value();
    std::copy(rows.data.begin(), rows.data.end(), embeddings.data.begin() + start * d);
  }

  ad::Tape tape;
  BoundModel bound(model, tape);
  Var table = tape.Constant(std::move(embeddings));
  Rng unused(0);
  Var scores = bound.PredictPairs(ad::GatherRows(table, pg.source_index),
                                  ad::GatherRows(table, pg.binary_index), false, unused);
  return scores.value().data;
}

Prediction Predict(MatchModel& model, const std::vector<PairSample>& pairs, GraphCache& graphs,
                   double threshold) {
  Prediction p;
  p.scores = ScorePairsInference(model, pairs, graphs);
  for (double s : p.scores) p.decisions.push_back(s >= threshold ? 1 : 0);
  return p;
}

TrainResult Train(const std::vector<PairSample>& train_pairs,
                  const std::vector<PairSample>& val_pairs, GraphCache& graphs,
                  ModelConfig model_config, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch,
                  const ad::ParameterStore* initial_parameters) {
  config.Validate();
  if (train_pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "no training pairs");
  if (val_pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "no validation pairs");
  const auto start_time = std::chrono::steady_clock::now();

  model_config.dropout_p = config.dropout_p;
  auto model = initial_parameters
                   ? std::make_unique<MatchModel>(model_config, *initial_parameters)
                   : std::make_unique<MatchModel>(model_config, DeriveSeed(config.seed, 0));
  ad::Adam adam(ad::AdamOptions{.lr = config.learning_rate});
  const std::vector<int> train_labels = Labels(train_pairs);
  const std::vector<int> val_labels = Labels(val_pairs);

  TrainResult result;
  TrainReport& report = result.report;
  std::vector<Tensor> best_values;
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(DeriveSeed(config.seed, 2 * epoch));
    Rng dropout_rng(DeriveSeed(config.seed, 2 * epoch + 1));
    shuffle_rng.Shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<const PairSample*> batch;
      Tensor labels({end - start});
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_pairs[order[i]]);
        labels[i - start] = train_pairs[order[i]].label;
      }
      const PairGraphs pg = CollectGraphs(batch);
      std::vector<const GraphInput*> inputs;
      for (const std::string& path : pg.paths) inputs.push_back(&graphs.Get(path));

      ad::Tape tape;
      BoundModel bound(*model, tape);
      Var loss;
      try {
        Var scores = ScorePairs(bound, inputs, pg.source_index, pg.binary_index, true,
                                dropout_rng);
        loss = ad::BceLoss(scores, labels);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNonFiniteScore && e.code() != ErrorCode::kNonFiniteInput) {
          throw;
        }
        std::string which;
        for (const PairSample* p : batch) which += "\n  " + p->path_a + " vs " + p->path_b;
        throw Error(ErrorCode::kNonFiniteLoss,
                    "epoch " + std::to_string(epoch) + ": " + e.what() + "; batch pairs:" + which);
      }
      loss_sum += loss.value()[0] * static_cast<double>(batch.size());
      if (!config.freeze_parameters) {
        model->parameters().ZeroGrad();
        tape.Backward(loss);
        adam.Step(model->parameters());
      }
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_pairs.size());
    const std::vector<double> train_scores = ScorePairsInference(*model, train_pairs, graphs);
    record.train = ComputeMetrics(train_scores, train_labels, config.threshold);
    const std::vector<double> val_scores = ScorePairsInference(*model, val_pairs, graphs);
    record.val = ComputeMetrics(val_scores, val_labels, config.threshold);
    record.val_loss = MeanBce(val_scores, val_labels);
    report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);

    const bool improved =
        best_values.empty() || record.val.f1 > report.best_val_f1 ||
        (record.val.f1 == report.best_val_f1 && record.val_loss < report.best_val_loss);
    if (improved) {
      report.best_epoch = epoch;
      report.best_val_f1 = record.val.f1;
      report.best_val_loss = record.val_loss;
      best_values.clear();
      for (const ad::Parameter& p : model->parameters()) best_values.push_back(p.value);
      since_best = 0;
    } else if (++since_best >= config.patience && config.patience > 0) {
      report.stopped_early = epoch < config.max_epochs;
      break;
    }
  }

  std::size_t i = 0;
  for (ad::Parameter& p : model->parameters()) {
    p.value = best_values[i++];
    p.grad = Tensor(p.value.shape);
  }
  result.model = std::move(model);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return result;
}

void SaveModel(const std::filesystem::path& path, const MatchModel& model,
               const TokenVocabulary& vocab, const nlohmann::json& extra) {
  nlohmann::json config = extra;
  config["model"] = model.config().ToJson();
  config["vocabulary"] = nlohmann::json::parse(SerializeVocabulary(vocab));
  ad::WriteCheckpoint(path, model.parameters(), config);
}

LoadedModel LoadModel(const std::filesystem::path& path) {
  ad::LoadedCheckpoint ckpt = ad::ReadCheckpoint(path);
  LoadedModel out;
  try {
    out.vocabulary = DeserializeVocabulary(ckpt.config.at("vocabulary").dump());
    const ModelConfig mc = ModelConfig::FromJson(ckpt.config.at("model"));
    ad::ParameterStore params;
    for (auto& [name, tensor] : ckpt.tensors) params.Add(name, std::move(tensor));
    out.model = std::make_unique<MatchModel>(mc, std::move(params));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, path.string() + ": " + e.what());
  }
  out.config = std::move(ckpt.config);
  return out;
}

}  // namespace gbm
