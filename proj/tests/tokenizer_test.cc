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

#include <gtest/gtest.h>

#include <algorithm>
#include <regex>

#include "gbm/io.h"
#include "gbm/ir_module.h"
#include "gbm/status.h"
#include "gbm/synthetic_corpus.h"
#include "test_util.h"

namespace gbm {
namespace {

// Identifier count by regular expression over the raw text.
std::size_t RegexIdentifierCount(const std::string& text) {
  static const std::regex ident(R"([%@](?:[-a-zA-Z$._][-a-zA-Z$._0-9]*|[0-9]+|"[^"]*"))");
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(text.begin(), text.end(), ident), std::sregex_iterator()));
}

std::size_t CountSubstring(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

std::vector<ProgramGraph> CorpusGraphs() {
  std::vector<ProgramGraph> graphs;
  for (const std::string& name : FixtureNames()) {
    graphs.push_back(BuildGraph(ParseModule(ReadFileBytes(FixturePath(name)), name)));
  }
  for (const SyntheticFile& f : GenerateSyntheticCorpus(0, 2)) {
    graphs.push_back(BuildGraph(ParseModule(f.text, f.relative_path), f.origin, f.language));
  }
  return graphs;
}

TEST(NormalizeTest, ReplacesEveryIdentifierWithVar) {
  EXPECT_EQ(NormalizeInstruction("%3 = load i32, i32* %2, align 4"),
            "[VAR] = load i32 , i32 * [VAR] , align 4");
  EXPECT_EQ(NormalizeInstruction("call void @\"odd name\"(i8* @.str)"),
            "call void [VAR] ( i8 * [VAR] )");
}

TEST(NormalizeTest, IsIdempotent) {
  const std::string once = NormalizeInstruction("%x = add nsw i32 %a, 7");
  EXPECT_EQ(NormalizeInstruction(once), once);
}

TEST(NormalizeTest, VarCountMatchesRegexOverCorpus) {
  Tokenizer tokenizer(TrainVocabulary(
      [] {
        static const auto graphs = CorpusGraphs();
        std::vector<const ProgramGraph*> p;
        for (const auto& g : graphs) p.push_back(&g);
        return p;
      }(),
      256, FeatureMode::kFullText));
  std::size_t checked = 0;
  for (const ProgramGraph& g : CorpusGraphs()) {
    for (const GraphNode& n : g.nodes) {
      if (n.full_text.empty()) continue;
      const std::string normalized = NormalizeInstruction(n.full_text);
      const std::size_t expected = RegexIdentifierCount(n.full_text);
      ASSERT_EQ(CountSubstring(normalized, "[VAR]"), expected) << n.full_text;
      ASSERT_EQ(CountIdentifiers(n.full_text), expected) << n.full_text;
      const auto ids = tokenizer.EncodeNormalized(normalized);
      ASSERT_EQ(static_cast<std::size_t>(std::count(ids.begin(), ids.end(), kVarId)), expected);
      ++checked;
    }
  }
  EXPECT_GT(checked, 500u);
}

TEST(RoundUpPow2Test, SmallestPowerAtLeastValue) {
  EXPECT_EQ(RoundUpPow2(50), 64u);
  EXPECT_EQ(RoundUpPow2(64), 64u);
  EXPECT_EQ(RoundUpPow2(65), 128u);
  EXPECT_EQ(RoundUpPow2(64.2), 128u);
  EXPECT_EQ(RoundUpPow2(0.3), 1u);
  EXPECT_EQ(RoundUpPow2(3), 4u);
}

TEST(VocabularyTest, TruncationIsPowerOfTwoAboveMeanLength) {
  const auto graphs = CorpusGraphs();
  std::vector<const ProgramGraph*> p;
  for (const auto& g : graphs) p.push_back(&g);
  const TokenVocabulary vocab = TrainVocabulary(p, 512, FeatureMode::kFullText);
  Tokenizer tokenizer(vocab);
  double total = 0;
  std::size_t nodes = 0;
  for (const auto& g : graphs) {
    for (const GraphNode& n : g.nodes) {
      total += static_cast<double>(
          tokenizer.EncodeNormalized(NormalizeInstruction(NodeFeatureText(n, vocab.feature_mode)))
              .size());
      ++nodes;
    }
  }
  const double mean = total / static_cast<double>(nodes);
  EXPECT_GE(static_cast<double>(vocab.truncation_length), mean);
  EXPECT_LT(static_cast<double>(vocab.truncation_length) / 2.0, mean);
  EXPECT_EQ(vocab.truncation_length & (vocab.truncation_length - 1), 0u);
}

TEST(VocabularyTest, SpecialsFirstAndSizeBounded) {
  const auto graphs = CorpusGraphs();
  std::vector<const ProgramGraph*> p;
  for (const auto& g : graphs) p.push_back(&g);
  const TokenVocabulary vocab = TrainVocabulary(p, 40, FeatureMode::kFullText);
  ASSERT_GE(vocab.entries.size(), 3u);
  EXPECT_EQ(vocab.entries[kPadId], "[PAD]");
  EXPECT_EQ(vocab.entries[kUnkId], "[UNK]");
  EXPECT_EQ(vocab.entries[kVarId], kVarToken);
  EXPECT_LE(vocab.entries.size(), 40u);
}

TEST(VocabularyTest, EncodeNodePadsAndTruncates) {
  const auto graphs = CorpusGraphs();
  std::vector<const ProgramGraph*> p;
  for (const auto& g : graphs) p.push_back(&g);
  TokenVocabulary vocab = TrainVocabulary(p, 300, FeatureMode::kFullText);
  vocab.truncation_length = 4;
  Tokenizer tokenizer(vocab);
  GraphNode longer{NodeKind::kInstruction, "add", "%a = add nsw i32 %b, %c", {}};
  EXPECT_EQ(tokenizer.EncodeNode(longer).size(), 4u);
  GraphNode shorter{NodeKind::kConstant, "i32", "", {}};
  const auto ids = tokenizer.EncodeNode(shorter);
  ASSERT_EQ(ids.size(), 4u);
  EXPECT_EQ(ids.back(), kPadId);
}

TEST(VocabularyTest, UnknownBytesEncodeAsUnk) {
  ProgramGraph g;
  g.nodes.push_back({NodeKind::kInstruction, "ret", "ret void", {}});
  TokenVocabulary vocab = TrainVocabulary({&g}, 16, FeatureMode::kFullText);
  Tokenizer tokenizer(vocab);
  const auto ids = tokenizer.EncodeNormalized("z");
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], kUnkId);
}

TEST(VocabularyTest, TextModeUsesNodeText) {
  GraphNode n{NodeKind::kInstruction, "add", "%a = add i32 %b, 1", {}};
  EXPECT_EQ(NodeFeatureText(n, FeatureMode::kText), "add");
  EXPECT_EQ(NodeFeatureText(n, FeatureMode::kFullText), "%a = add i32 %b, 1");
}

TEST(VocabularyTest, TrainingIsDeterministicAndSerializes) {
  const auto graphs = CorpusGraphs();
  std::vector<const ProgramGraph*> p;
  for (const auto& g : graphs) p.push_back(&g);
  const TokenVocabulary a = TrainVocabulary(p, 200, FeatureMode::kText);
  const TokenVocabulary b = TrainVocabulary(p, 200, FeatureMode::kText);
  EXPECT_EQ(a, b);
  EXPECT_EQ(DeserializeVocabulary(SerializeVocabulary(a)), a);
}

TEST(VocabularyTest, RejectsBadInputs) {
  EXPECT_THROW(TrainVocabulary({}, 100, FeatureMode::kFullText), Error);
  ProgramGraph g;
  g.nodes.push_back({NodeKind::kInstruction, "ret", "ret void", {}});
  EXPECT_THROW(TrainVocabulary({&g}, 4, FeatureMode::kFullText), Error);
  EXPECT_THROW(DeserializeVocabulary("{}"), Error);
}

}  // namespace
}  // namespace gbm
