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

#ifndef GBM_TOKENIZER_H_
#define GBM_TOKENIZER_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gbm/program_graph.h"

namespace gbm {

enum class FeatureMode { kFullText, kText };

std::string_view FeatureModeName(FeatureMode mode);
// Accepts "full_text" and "text"; throws Error(kInvalidArgument) otherwise.
FeatureMode ParseFeatureMode(std::string_view name);

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kVarId = 2;
inline constexpr std::string_view kVarToken = "[VAR]";
inline constexpr std::size_t kMaxVocabularySize = 2048;

// Rewrites every `%ident` / `@ident` (named, numbered or quoted) to `[VAR]`,
// splits the punctuation `, = ( ) [ ] { } *` into separate tokens, and
// collapses whitespace. `[VAR]` itself is kept intact, which makes the
// function idempotent.
std::string NormalizeInstruction(std::string_view full_text);

// Number of `%`/`@` identifiers in raw IR text, counted the same way
// NormalizeInstruction finds them.
std::size_t CountIdentifiers(std::string_view full_text);

// Smallest power of two that is >= value (1 for value <= 1).
std::size_t RoundUpPow2(double value);

struct TokenVocabulary {
  // Index is the token id. Ids 0..2 are [PAD], [UNK], [VAR].
  std::vector<std::string> entries;
  std::vector<std::pair<std::string, std::string>> merges;
  std::size_t truncation_length = 1;
  FeatureMode feature_mode = FeatureMode::kFullText;

  bool operator==(const TokenVocabulary&) const = default;
};

// The string a node contributes to tokenization under `mode`.
std::string_view NodeFeatureText(const GraphNode& node, FeatureMode mode);

// Byte-pair-encoding over whitespace-separated words of the normalized node
// strings. The initial alphabet is the printable ASCII bytes present in the
// corpus; other bytes always encode as [UNK]. Each step merges the most
// frequent adjacent pair (ties: lexicographically smallest pair) and stops
// at `vocab_size` entries or when no pair occurs at least twice.
// Throws Error(kEmptyCorpus) when `graphs` has no nodes and
// Error(kInvalidArgument) for vocab_size outside [16, 2048].
TokenVocabulary TrainVocabulary(const std::vector<const ProgramGraph*>& graphs,
                                std::size_t vocab_size, FeatureMode mode);

// Encodes nodes with a vocabulary. Keeps a per-word cache, so one instance
// should not be shared across threads.
class Tokenizer {
 public:
  explicit Tokenizer(TokenVocabulary vocab);

  const TokenVocabulary& vocabulary() const { return vocab_; }

  // BPE ids of a normalized string, without truncation or padding.
  std::vector<int> EncodeNormalized(std::string_view normalized);
  // normalize -> BPE -> truncate -> right-pad with [PAD]. Empty full_text
  // falls back to text.
  std::vector<int> EncodeNode(const GraphNode& node);
  // Fills token_ids for every node.
  void EncodeGraph(ProgramGraph& graph);

 private:
  const std::vector<int>& EncodeWord(const std::string& word);

  TokenVocabulary vocab_;
  std::unordered_map<std::string, int> ids_;
  std::unordered_map<std::string, std::size_t> merge_rank_;
  std::unordered_map<std::string, std::vector<int>> cache_;
};

std::string SerializeVocabulary(const TokenVocabulary& vocab);
// Throws Error(kVersionMismatch) or Error(kCorruptPayload).
TokenVocabulary DeserializeVocabulary(std::string_view text);

}  // namespace gbm

#endif  // GBM_TOKENIZER_H_
