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

#ifndef GBM_SYNTHETIC_CORPUS_H_
#define GBM_SYNTHETIC_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gbm/program_graph.h"

namespace gbm {

// A small task-labelled corpus of IR programs. Every task has a
// front-end-style ("source") template and a decompiler-style ("binary")
// template; variants of each are produced by renaming every local
// identifier, shuffling the non-entry blocks and inserting dead
// instructions.
struct SyntheticFile {
  std::string task;
  Origin origin = Origin::kSource;
  std::string language;
  // `<task>/<origin>/<language>/v<k>.ll`
  std::string relative_path;
  std::string text;
};

std::vector<std::string> SyntheticTaskNames();

// Variant 0 of each side is the template with renaming only.
std::vector<SyntheticFile> GenerateSyntheticCorpus(std::uint64_t seed,
                                                   std::size_t variants_per_side = 4);

// Writes the corpus below `dir` and returns the number of files.
std::size_t WriteSyntheticCorpus(const std::filesystem::path& dir, std::uint64_t seed,
                                 std::size_t variants_per_side = 4);

}  // namespace gbm

#endif  // GBM_SYNTHETIC_CORPUS_H_
