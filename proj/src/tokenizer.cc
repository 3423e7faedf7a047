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

#include "gbm/tokenizer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gbm/status.h"
#include "json.hpp"

namespace gbm {

std::string_view FeatureModeName(FeatureMode mode) {
  return mode == FeatureMode::kFullText ? "full_text" : "text";
}

FeatureMode ParseFeatureMode(std::string_view name) {
  if (name == "full_text") return FeatureMode::kFullText;
  if (name == "text") return FeatureMode::kText;
  throw Error(ErrorCode::kInvalidArgument,
              "feature_mode must be full_text or text, got '" + std::string(name) + "'");
}

namespace {

bool IsSplitPunct(char c) {
  switch (c) {
    case ',': case '=': case '(': case ')': case '[': case ']':
    case '{': case '}': case '*':
      return true;
    default:
      return false;
  }
}

bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '$' ||
         c == '.' || c == '_';
}

// Length of the identifier starting at s[i] (a '%' or '@'), or 0 when the
// sigil is not followed by a name, number or quoted string.
std::size_t IdentifierLength(std::string_view s, std::size_t i) {
  if (i + 1 >= s.size()) return 0;
  std::size_t j = i + 1;
  if (s[j] == '"') {
    const std::size_t close = s.find('"', j + 1);
    return close == std::string_view::npos ? 0 : close + 1 - i;
  }
  while (j < s.size() && IsIdentChar(s[j])) ++j;
  return j - i - 1 > 0 ? j - i : 0;
}

// Splits `s` into normalized tokens; returns how many identifiers were
// replaced.
std::size_t NormalizeTokens(std::string_view s, std::vector<std::string>& out) {
  std::size_t replaced = 0;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (s.substr(i, kVarToken.size()) == kVarToken) {
      flush();
      out.emplace_back(kVarToken);
      i += kVarToken.size();
      continue;
    }
    if (c == '%' || c == '@') {
      if (std::size_t len = IdentifierLength(s, i); len > 0) {
        flush();
        out.emplace_back(kVarToken);
        ++replaced;
        i += len;
        continue;
      }
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (IsSplitPunct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      word.push_back(c);
    }
    ++i;
  }
  flush();
  return replaced;
}

std::vector<std::string> Words(std::string_view normalized) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && normalized[i] == ' ') ++i;
    std::size_t j = i;
    while (j < normalized.size() && normalized[j] != ' ') ++j;
    if (j > i) words.emplace_back(normalized.substr(i, j - i));
    i = j;
  }
  return words;
}

bool InAlphabet(unsigned char c) { return c > 0x20 && c < 0x7f; }

std::string MergeKey(const std::string& a, const std::string& b) {
  std::string key = a;
  key.push_back('\0');
  key += b;
  return key;
}

}  // namespace

std::string NormalizeInstruction(std::string_view full_text) {
  std::vector<std::string> tokens;
  NormalizeTokens(full_text, tokens);
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

std::size_t CountIdentifiers(std::string_view full_text) {
  std::vector<std::string> tokens;
  return NormalizeTokens(full_text, tokens);
}

std::size_t RoundUpPow2(double value) {
  std::size_t p = 1;
  while (static_cast<double>(p) < value) p <<= 1;
  return p;
}

std::string_view NodeFeatureText(const GraphNode& node, FeatureMode mode) {
  if (mode == FeatureMode::kFullText && !node.full_text.empty()) {
    return node.full_text;
  }
  return node.text;
}

TokenVocabulary TrainVocabulary(const std::vector<const ProgramGraph*>& graphs,
                                std::size_t vocab_size, FeatureMode mode) {
  if (vocab_size < 16 || vocab_size > kMaxVocabularySize) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocab_size must be in [16, 2048], got " + std::to_string(vocab_size));
  }
  std::map<std::string, std::size_t> word_freq;
  std::vector<std::string> normalized;
  for (const ProgramGraph* g : graphs) {
    for (const GraphNode& node : g->nodes) {
      normalized.push_back(NormalizeInstruction(NodeFeatureText(node, mode)));
      for (std::string& w : Words(normalized.back())) {
        if (w != kVarToken) ++word_freq[std::move(w)];
      }
    }
  }
  if (normalized.empty()) throw Error(ErrorCode::kEmptyCorpus, "no nodes to train on");

  TokenVocabulary vocab;
  vocab.feature_mode = mode;
  vocab.entries = {"[PAD]", "[UNK]", std::string(kVarToken)};
  std::map<unsigned char, std::size_t> char_freq;
  for (const auto& [word, freq] : word_freq) {
    for (char c : word) {
      if (InAlphabet(static_cast<unsigned char>(c))) char_freq[c] += freq;
    }
  }
  // When the budget cannot hold every character, the rarest ones (ties: the
  // larger byte) are left to [UNK].
  std::vector<std::pair<unsigned char, std::size_t>> by_freq(char_freq.begin(), char_freq.end());
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (by_freq.size() > vocab_size - vocab.entries.size()) {
    by_freq.resize(vocab_size - vocab.entries.size());
  }
  std::set<unsigned char> alphabet;
  for (const auto& [c, freq] : by_freq) alphabet.insert(c);
  std::map<std::string, int> ids;
  for (int i = 0; i < 3; ++i) ids[vocab.entries[i]] = i;
  for (unsigned char c : alphabet) {
    ids[std::string(1, c)] = static_cast<int>(vocab.entries.size());
    vocab.entries.emplace_back(1, c);
  }

  struct WordSymbols {
    std::vector<int> symbols;
    std::size_t freq;
  };
  std::vector<WordSymbols> words;
  for (const auto& [word, freq] : word_freq) {
    WordSymbols w{{}, freq};
    for (char c : word) {
      auto it = ids.find(std::string(1, c));
      w.symbols.push_back(it == ids.end() ? kUnkId : it->second);
    }
    words.push_back(std::move(w));
  }

  while (vocab.entries.size() < vocab_size) {
    std::map<std::pair<int, int>, std::size_t> pair_count;
    for (const WordSymbols& w : words) {
      for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i) {
        if (w.symbols[i] == kUnkId || w.symbols[i + 1] == kUnkId) continue;
        pair_count[{w.symbols[i], w.symbols[i + 1]}] += w.freq;
      }
    }
    const std::pair<int, int>* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : pair_count) {
      if (count > best_count) {
        best = &pair;
        best_count = count;
      } else if (count == best_count) {
        const auto& e = vocab.entries;
        if (std::tie(e[pair.first], e[pair.second]) <
            std::tie(e[best->first], e[best->second])) {
          best = &pair;
        }
      }
    }
    if (best == nullptr || best_count < 2) break;
    const auto [a, b] = *best;
    const std::string merged = vocab.entries[a] + vocab.entries[b];
    vocab.merges.emplace_back(vocab.entries[a], vocab.entries[b]);
    int merged_id;
    if (auto it = ids.find(merged); it != ids.end()) {
      merged_id = it->second;
    } else {
      merged_id = static_cast<int>(vocab.entries.size());
      ids.emplace(merged, merged_id);
      vocab.entries.push_back(merged);
    }
    for (WordSymbols& w : words) {
      std::vector<int> next;
      next.reserve(w.symbols.size());
      for (std::size_t i = 0; i < w.symbols.size(); ++i) {
        if (i + 1 < w.symbols.size() && w.symbols[i] == a && w.symbols[i + 1] == b) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(w.symbols[i]);
        }
      }
      w.symbols = std::move(next);
    }
  }

  // Truncation length from the untruncated encodings of the training nodes.
  Tokenizer tokenizer(vocab);
  double total = 0.0;
  for (const std::string& s : normalized) {
    total += static_cast<double>(tokenizer.EncodeNormalized(s).size());
  }
  vocab.truncation_length = RoundUpPow2(total / static_cast<double>(normalized.size()));
  return vocab;
}

Tokenizer::Tokenizer(TokenVocabulary vocab) : vocab_(std::move(vocab)) {
  for (std::size_t i = 0; i < vocab_.entries.size(); ++i) {
    ids_.emplace(vocab_.entries[i], static_cast<int>(i));
  }
  for (std::size_t r = 0; r < vocab_.merges.size(); ++r) {
    merge_rank_.emplace(MergeKey(vocab_.merges[r].first, vocab_.merges[r].second), r);
  }
}

const std::vector<int>& Tokenizer::EncodeWord(const std::string& word) {
  if (auto it = cache_.find(word); it != cache_.end()) return it->second;
  std::vector<std::string> parts;
  for (char c : word) parts.emplace_back(1, c);
  while (parts.size() > 1) {
    std::size_t best_rank = vocab_.merges.size();
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      auto it = merge_rank_.find(MergeKey(parts[i], parts[i + 1]));
      if (it != merge_rank_.end()) best_rank = std::min(best_rank, it->second);
    }
    if (best_rank == vocab_.merges.size()) break;
    const auto& [a, b] = vocab_.merges[best_rank];
    std::vector<std::string> next;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i + 1 < parts.size() && parts[i] == a && parts[i + 1] == b) {
        next.push_back(a + b);
        ++i;
      } else {
        next.push_back(std::move(parts[i]));
      }
    }
    parts = std::move(next);
  }
  std::vector<int> out;
  out.reserve(parts.size());
  for (const std::string& p : parts) {
    auto it = ids_.find(p);
    out.push_back(it == ids_.end() ? kUnkId : it->second);
  }
  return cache_.emplace(word, std::move(out)).first->second;
}

std::vector<int> Tokenizer::EncodeNormalized(std::string_view normalized) {
  std::vector<int> out;
  for (const std::string& w : Words(normalized)) {
    if (w == kVarToken) {
      out.push_back(kVarId);
    } else {
      const auto& ids = EncodeWord(w);
      out.insert(out.end(), ids.begin(), ids.end());
    }
  }
  return out;
}

std::vector<int> Tokenizer::EncodeNode(const GraphNode& node) {
  std::vector<int> ids = EncodeNormalized(
      NormalizeInstruction(NodeFeatureText(node, vocab_.feature_mode)));
  ids.resize(vocab_.truncation_length, kPadId);
  return ids;
}

void Tokenizer::EncodeGraph(ProgramGraph& graph) {
  for (GraphNode& node : graph.nodes) node.token_ids = EncodeNode(node);
}

std::string SerializeVocabulary(const TokenVocabulary& vocab) {
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [a, b] : vocab.merges) merges.push_back({a, b});
  nlohmann::json doc = {{"version", 1},
                        {"feature_mode", FeatureModeName(vocab.feature_mode)},
                        {"truncation_length", vocab.truncation_length},
                        {"entries", vocab.entries},
                        {"merges", std::move(merges)}};
  return doc.dump() + "\n";
}

TokenVocabulary DeserializeVocabulary(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, std::string("vocabulary: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("version")) {
    throw Error(ErrorCode::kCorruptPayload, "vocabulary: missing version");
  }
  if (doc["version"] != 1) {
    throw Error(ErrorCode::kVersionMismatch,
                "vocabulary: unsupported version " + doc["version"].dump());
  }
  TokenVocabulary vocab;
  try {
    vocab.feature_mode = ParseFeatureMode(doc.at("feature_mode").get<std::string>());
    vocab.truncation_length = doc.at("truncation_length").get<std::size_t>();
    vocab.entries = doc.at("entries").get<std::vector<std::string>>();
    for (const auto& m : doc.at("merges")) {
      vocab.merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, std::string("vocabulary: ") + e.what());
  }
  const std::size_t t = vocab.truncation_length;
  if (t == 0 || (t & (t - 1)) != 0) {
    throw Error(ErrorCode::kCorruptPayload, "vocabulary: truncation_length is not a power of 2");
  }
  if (vocab.entries.size() < 3 || vocab.entries.size() > kMaxVocabularySize ||
      vocab.entries[kVarId] != kVarToken) {
    throw Error(ErrorCode::kCorruptPayload, "vocabulary: bad entry table");
  }
  return vocab;
}

}  // namespace gbm
