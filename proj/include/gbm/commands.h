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

#ifndef GBM_COMMANDS_H_
#define GBM_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gbm/model.h"
#include "gbm/tokenizer.h"
#include "gbm/trainer.h"
#include "json.hpp"

namespace gbm {

// Flags shared by every subcommand.
struct GlobalOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  FeatureMode feature_mode = FeatureMode::kFullText;
  // Set when the feature mode was chosen explicitly rather than defaulted.
  bool feature_mode_given = false;
  double threshold = 0.5;

  nlohmann::json ToJson() const;
};

// Every command writes `resolved_config.json` into its output directory and
// nothing outside it. Paths stored in an output file are relative to the
// directory holding that file.

struct BuildGraphsOptions {
  // Scanned recursively for `.ll` files laid out as
  // `<task>/<origin>/<lang>/<file>.ll`.
  std::filesystem::path input_dir;
  // Optional JSON Lines file of `{"file","task","lang","origin"}` records
  // (file relative to the mapping file) used instead of the layout.
  std::filesystem::path mapping;
  std::filesystem::path out_dir;
};

struct BuildGraphsSummary {
  std::size_t inputs = 0;
  std::size_t built = 0;
  // "<input>: <reason>" for every skipped file.
  std::vector<std::string> failures;

  nlohmann::json ToJson() const;
};

// Writes `graphs/<relative input path>.pgraph` per input and `manifest.jsonl`.
// Throws Error(kNoInputs) when nothing is found and Error(kMalformedModule)
// when every input failed.
BuildGraphsSummary RunBuildGraphs(const BuildGraphsOptions& options,
                                  const GlobalOptions& global, std::ostream& log);

struct TrainVocabOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  std::size_t vocab_size = kMaxVocabularySize;
};

// Trains on the graphs of the training split only and writes `vocab.json`.
TokenVocabulary RunTrainVocab(const TrainVocabOptions& options, const GlobalOptions& global,
                              std::ostream& log);

struct MakePairsOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  // Empty means any language.
  std::string source_language;
  std::string binary_language;
};

// Writes `train_pairs.jsonl`, `val_pairs.jsonl`, `test_pairs.jsonl` and
// `split.json`. Returns the pair count per split.
nlohmann::json RunMakePairs(const MakePairsOptions& options, const GlobalOptions& global,
                            std::ostream& log);

struct TrainOptions {
  std::filesystem::path train_pairs;
  std::filesystem::path val_pairs;
  std::filesystem::path vocabulary;
  std::filesystem::path out_dir;
  ModelConfig model;
  TrainConfig train;
};

// Writes `model.ckpt`, `report.json` and `report.txt`. The seed and
// threshold come from the global options.
TrainReport RunTrain(TrainOptions options, const GlobalOptions& global, std::ostream& log);

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path pairs;
  std::filesystem::path out_dir;
};

// Writes `metrics.json`, `sweep.csv`, `size_gap.csv` and `scores.jsonl`;
// returns the content of `metrics.json`.
nlohmann::json RunEval(const EvalOptions& options, const GlobalOptions& global,
                       std::ostream& log);

struct PredictOptions {
  std::filesystem::path checkpoint;
  // `.ll` text or a serialized graph; the first is the source side.
  std::filesystem::path source;
  std::filesystem::path binary;
};

// `{"match": bool, "score": number}`
nlohmann::json RunPredict(const PredictOptions& options, const GlobalOptions& global);

struct SyntheticCorpusOptions {
  std::filesystem::path out_dir;
  std::size_t variants_per_side = 4;
};

std::size_t RunMakeSyntheticCorpus(const SyntheticCorpusOptions& options,
                                   const GlobalOptions& global, std::ostream& log);

// Exit codes of the command-line entry point.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitNumericError = 3;

// Parses `argv` and runs one subcommand. Results go to `out`, progress and
// errors to `err`.
int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gbm

#endif  // GBM_COMMANDS_H_
