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

#include "gbm/pair_dataset.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "gbm/random.h"
#include "gbm/status.h"
#include "json.hpp"

namespace gbm {

namespace {

// Above this many candidate negatives, sampling switches from a partial
// shuffle of the full candidate list to rejection sampling.
constexpr std::size_t kEnumerateLimit = 1 << 22;

std::vector<std::string_view> Lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

bool Blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string SerializeManifest(const CorpusManifest& manifest) {
  std::string out;
  for (const ManifestRecord& r : manifest) {
    nlohmann::json j = {{"graph", r.graph_path},
                        {"task", r.task_id},
                        {"lang", r.language},
                        {"origin", OriginName(r.origin)}};
    out += j.dump() + "\n";
  }
  return out;
}

CorpusManifest ParseManifest(std::string_view text) {
  CorpusManifest manifest;
  std::set<std::string> seen;
  const auto lines = Lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (Blank(lines[i])) continue;
    const std::string where = "manifest line " + std::to_string(i + 1);
    ManifestRecord r;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      r.graph_path = j.at("graph").get<std::string>();
      r.task_id = j.at("task").get<std::string>();
      r.language = j.value("lang", std::string());
      r.origin = ParseOrigin(j.at("origin").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptPayload, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptPayload, where + ": " + e.what());
    }
    if (!seen.insert(r.graph_path).second) {
      throw Error(ErrorCode::kCorruptPayload, where + ": duplicate graph " + r.graph_path);
    }
    manifest.push_back(std::move(r));
  }
  return manifest;
}

SplitCounts ComputeSplitCounts(std::size_t num_tasks, const SplitSpec& spec) {
  auto part = [&](double ratio) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(ratio * static_cast<double>(num_tasks))));
  };
  SplitCounts c;
  c.val = part(spec.val);
  c.test = part(spec.test);
  c.train = num_tasks >= c.val + c.test ? num_tasks - c.val - c.test : 0;
  return c;
}

ManifestSplit SplitByTask(const CorpusManifest& manifest, const SplitSpec& spec) {
  const double total = spec.train + spec.val + spec.test;
  if (std::abs(total - 1.0) > 1e-9 || spec.train <= 0 || spec.val <= 0 || spec.test <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be positive and sum to 1");
  }
  std::set<std::string> task_set;
  for (const ManifestRecord& r : manifest) task_set.insert(r.task_id);
  if (task_set.size() < 5) {
    throw Error(ErrorCode::kTooFewTasks,
                "need at least 5 tasks, got " + std::to_string(task_set.size()));
  }
  std::vector<std::string> tasks(task_set.begin(), task_set.end());
  Rng rng(spec.seed);
  rng.Shuffle(tasks);
  const SplitCounts counts = ComputeSplitCounts(tasks.size(), spec);
  std::map<std::string, int> part;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    part[tasks[i]] = i < counts.train ? 0 : (i < counts.train + counts.val ? 1 : 2);
  }
  ManifestSplit split;
  for (const ManifestRecord& r : manifest) {
    switch (part[r.task_id]) {
      case 0: split.train.push_back(r); break;
      case 1: split.val.push_back(r); break;
      default: split.test.push_back(r); break;
    }
  }
  return split;
}

RecordFilter MakeSideFilter(Origin origin, std::optional<std::string> language) {
  return [origin, language = std::move(language)](const ManifestRecord& r) {
    return r.origin == origin && (!language || r.language == *language);
  };
}

std::vector<PairSample> GeneratePairs(const CorpusManifest& manifest,
                                      const RecordFilter& side_a,
                                      const RecordFilter& side_b, std::uint64_t seed) {
  std::vector<const ManifestRecord*> a, b;
  for (const ManifestRecord& r : manifest) {
    if (side_a(r)) a.push_back(&r);
    if (side_b(r)) b.push_back(&r);
  }
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "pair side filter selects no records");
  }

  std::vector<PairSample> pairs;
  std::size_t negatives_available = 0;
  for (const ManifestRecord* x : a) {
    for (const ManifestRecord* y : b) {
      if (x->task_id != y->task_id) {
        ++negatives_available;
      } else if (x->graph_path != y->graph_path) {
        pairs.push_back({x->graph_path, y->graph_path, 1});
      }
    }
  }
  const std::size_t needed = pairs.size();
  if (negatives_available < needed) {
    throw Error(ErrorCode::kInsufficientNegatives,
                std::to_string(needed) + " positives but only " +
                    std::to_string(negatives_available) + " negative pairs");
  }

  Rng rng(DeriveSeed(seed, 1));
  const std::size_t grid = a.size() * b.size();
  auto negative_at = [&](std::size_t cell) {
    return PairSample{a[cell / b.size()]->graph_path, b[cell % b.size()]->graph_path, 0};
  };
  auto is_negative = [&](std::size_t cell) {
    return a[cell / b.size()]->task_id != b[cell % b.size()]->task_id;
  };
  if (negatives_available <= kEnumerateLimit) {
    std::vector<std::size_t> cells;
    cells.reserve(negatives_available);
    for (std::size_t cell = 0; cell < grid; ++cell) {
      if (is_negative(cell)) cells.push_back(cell);
    }
    // Partial Fisher-Yates: the first `needed` slots form a uniform sample.
    for (std::size_t i = 0; i < needed; ++i) {
      std::swap(cells[i], cells[i + rng.Index(cells.size() - i)]);
      pairs.push_back(negative_at(cells[i]));
    }
  } else {
    std::unordered_set<std::size_t> chosen;
    while (chosen.size() < needed) {
      const std::size_t cell = rng.Index(grid);
      if (is_negative(cell) && chosen.insert(cell).second) {
        pairs.push_back(negative_at(cell));
      }
    }
  }
  Rng order(DeriveSeed(seed, 2));
  order.Shuffle(pairs);
  return pairs;
}

std::string SerializePairs(const std::vector<PairSample>& pairs) {
  std::string out;
  for (const PairSample& p : pairs) {
    nlohmann::json j = {{"a", p.path_a}, {"b", p.path_b}, {"label", p.label}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<PairSample> ParsePairs(std::string_view text) {
  std::vector<PairSample> pairs;
  const auto lines = Lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (Blank(lines[i])) continue;
    PairSample p;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      p.path_a = j.at("a").get<std::string>();
      p.path_b = j.at("b").get<std::string>();
      p.label = j.at("label").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptPayload,
                  "pairs line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (p.label != 0 && p.label != 1) {
      throw Error(ErrorCode::kCorruptPayload,
                  "pairs line " + std::to_string(i + 1) + ": label must be 0 or 1");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace gbm
