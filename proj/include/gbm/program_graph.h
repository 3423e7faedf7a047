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

#ifndef GBM_PROGRAM_GRAPH_H_
#define GBM_PROGRAM_GRAPH_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gbm/ir_module.h"

namespace gbm {

enum class NodeKind { kInstruction = 0, kVariable = 1, kConstant = 2 };
enum class Relation { kControl = 0, kData = 1, kCall = 2 };
enum class Origin { kSource, kBinary };

inline constexpr std::size_t kNumRelations = 3;
inline constexpr std::size_t kNumNodeKinds = 3;

std::string_view NodeKindName(NodeKind kind);
std::string_view RelationName(Relation rel);
std::string_view OriginName(Origin origin);
NodeKind ParseNodeKind(std::string_view name);
Relation ParseRelation(std::string_view name);
Origin ParseOrigin(std::string_view name);

// Text of the synthetic node that absorbs calls to declared-only functions.
inline constexpr std::string_view kExternalNodeText = "[external]";

struct GraphNode {
  NodeKind kind = NodeKind::kInstruction;
  // Opcode for instructions, type name for variables and constants.
  std::string text;
  // Full instruction, or "type value" for variables/constants. Empty only
  // for the synthetic external node.
  std::string full_text;
  // Filled in by the tokenizer at load time; never serialized.
  std::vector<int> token_ids;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  Relation relation = Relation::kControl;
  std::size_t src = 0;
  std::size_t dst = 0;
  std::size_t position = 0;

  bool operator==(const GraphEdge&) const = default;
};

// Heterogeneous program graph. Instruction nodes come first, one per
// instruction in module order (function, block, instruction), so node k is
// the k-th instruction of the module.
struct ProgramGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::string source_path;
  Origin origin = Origin::kSource;
  std::string language;

  bool operator==(const ProgramGraph&) const = default;
};

// Nodes: one per instruction; one variable per distinct SSA result and per
// used function argument; one constant per distinct (type, literal) or
// global operand.
// Edges: control between consecutive instructions of a block and from a
// terminator to each successor's first instruction (position = successor
// index; a block ending in a non-terminator falls through to the next
// block); data from a definition to its variable (position 0) and from a
// variable/constant to each use (position = operand index); call from a
// call site to the callee's entry instruction, or to a single external node
// when the callee has no body in the module.
// Throws Error(kEmptyModule) when the module has no function bodies.
ProgramGraph BuildGraph(const IrModule& module, Origin origin = Origin::kSource,
                        std::string language = "");

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::array<std::size_t, kNumRelations> edge_count_by_relation{};
  std::array<std::size_t, kNumNodeKinds> node_count_by_kind{};

  bool operator==(const GraphStats&) const = default;
};

GraphStats ComputeGraphStats(const ProgramGraph& graph);

inline constexpr std::string_view kGraphMagic = "PGRAPH1\n";

// "PGRAPH1\n" followed by canonical (sorted-key) JSON.
std::string SerializeGraph(const ProgramGraph& graph);
// Throws Error(kVersionMismatch) for another PGRAPH version and
// Error(kCorruptPayload) for anything else that does not parse.
ProgramGraph DeserializeGraph(std::string_view bytes);

// Checks the structural invariants; returns an empty string when valid.
std::string ValidateGraph(const ProgramGraph& graph);

}  // namespace gbm

#endif  // GBM_PROGRAM_GRAPH_H_
