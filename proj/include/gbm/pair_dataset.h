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

#ifndef GBM_PAIR_DATASET_H_
#define GBM_PAIR_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gbm/program_graph.h"

namespace gbm {

struct ManifestRecord {
  std::string graph_path;
  std::string task_id;
  std::string language;
  Origin origin = Origin::kSource;

  bool operator==(const ManifestRecord&) const = default;
};

using CorpusManifest = std::vector<ManifestRecord>;

// JSON Lines, one `{"graph","task","lang","origin"}` object per line.
std::string SerializeManifest(const CorpusManifest& manifest);
// Throws Error(kCorruptPayload) naming the line, or for duplicate paths.
CorpusManifest ParseManifest(std::string_view text);

struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
};

struct ManifestSplit {
  CorpusManifest train;
  CorpusManifest val;
  CorpusManifest test;
};

// Number of tasks per partition for `num_tasks` tasks: val and test each get
// max(1, round(ratio * n)) and train keeps the rest.
struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};
SplitCounts ComputeSplitCounts(std::size_t num_tasks, const SplitSpec& spec);

// Partitions tasks (sorted, then shuffled with the seed) into train, val and
// test; every record follows its task and keeps its manifest order.
// Throws Error(kTooFewTasks) below 5 distinct tasks and
// Error(kInvalidArgument) when the ratios do not sum to 1.
ManifestSplit SplitByTask(const CorpusManifest& manifest, const SplitSpec& spec);

struct PairSample {
  std::string path_a;  // source side
  std::string path_b;  // binary side
  int label = 0;

  bool operator==(const PairSample&) const = default;
};

using RecordFilter = std::function<bool(const ManifestRecord&)>;

// Selects records by origin and, optionally, language.
RecordFilter MakeSideFilter(Origin origin, std::optional<std::string> language = {});

// Positives: every same-task (a, b) with a passing `side_a` and b passing
// `side_b` (identical paths skipped). Negatives: the same number drawn
// uniformly without replacement from the different-task pairs. The result
// is shuffled with the seed.
// Throws Error(kInvalidArgument) when a side selects nothing and
// Error(kInsufficientNegatives) when there are fewer negatives than
// positives.
std::vector<PairSample> GeneratePairs(const CorpusManifest& manifest,
                                      const RecordFilter& side_a,
                                      const RecordFilter& side_b, std::uint64_t seed);

// JSON Lines, one `{"a","b","label"}` object per line.
std::string SerializePairs(const std::vector<PairSample>& pairs);
std::vector<PairSample> ParsePairs(std::string_view text);

}  // namespace gbm

#endif  // GBM_PAIR_DATASET_H_
