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

#include "gbm/program_graph.h"

#include <map>
#include <optional>
#include <set>
#include <utility>

#include "gbm/status.h"
#include "json.hpp"

namespace gbm {

std::string_view NodeKindName(NodeKind kind) {
  switch (kind) {
    case NodeKind::kInstruction: return "instruction";
    case NodeKind::kVariable: return "variable";
    case NodeKind::kConstant: return "constant";
  }
  return "instruction";
}

std::string_view RelationName(Relation rel) {
  switch (rel) {
    case Relation::kControl: return "control";
    case Relation::kData: return "data";
    case Relation::kCall: return "call";
  }
  return "control";
}

std::string_view OriginName(Origin origin) {
  return origin == Origin::kSource ? "source" : "binary";
}

NodeKind ParseNodeKind(std::string_view name) {
  if (name == "instruction") return NodeKind::kInstruction;
  if (name == "variable") return NodeKind::kVariable;
  if (name == "constant") return NodeKind::kConstant;
  throw Error(ErrorCode::kCorruptPayload, "unknown node kind " + std::string(name));
}

Relation ParseRelation(std::string_view name) {
  if (name == "control") return Relation::kControl;
  if (name == "data") return Relation::kData;
  if (name == "call") return Relation::kCall;
  throw Error(ErrorCode::kCorruptPayload, "unknown relation " + std::string(name));
}

Origin ParseOrigin(std::string_view name) {
  if (name == "source") return Origin::kSource;
  if (name == "binary") return Origin::kBinary;
  throw Error(ErrorCode::kInvalidArgument, "unknown origin " + std::string(name));
}

namespace {

class GraphBuilder {
 public:
  GraphBuilder(const IrModule& module, ProgramGraph& graph)
      : module_(module), graph_(graph) {}

  void Build();

 private:
  std::size_t AddNode(NodeKind kind, std::string text, std::string full_text) {
    if (text.empty()) text = std::string(NodeKindName(kind));
    graph_.nodes.push_back(GraphNode{kind, std::move(text), std::move(full_text), {}});
    return graph_.nodes.size() - 1;
  }
  void AddEdge(Relation rel, std::size_t src, std::size_t dst, std::size_t pos) {
    graph_.edges.push_back(GraphEdge{rel, src, dst, pos});
  }

  std::size_t VariableNode(std::size_t function, const std::string& id,
                           const std::string& type) {
    auto [it, inserted] = variables_.try_emplace({function, id}, 0);
    if (inserted) it->second = AddNode(NodeKind::kVariable, type, Typed(type, id));
    return it->second;
  }

  std::size_t ConstantNode(const IrOperand& op) {
    // Globals are keyed by name alone; literals by (type, text).
    const std::string key_type =
        op.kind == OperandKind::kGlobal ? std::string() : op.type;
    auto [it, inserted] = constants_.try_emplace({key_type, op.value}, 0);
    if (inserted) {
      it->second = AddNode(NodeKind::kConstant, op.type, Typed(op.type, op.value));
    }
    return it->second;
  }

  std::size_t ExternalNode() {
    if (!external_) {
      external_ = AddNode(NodeKind::kInstruction, std::string(kExternalNodeText), "");
    }
    return *external_;
  }

  static std::string Typed(const std::string& type, const std::string& value) {
    return type.empty() ? value : type + " " + value;
  }

  const IrModule& module_;
  ProgramGraph& graph_;
  std::map<std::pair<std::size_t, std::string>, std::size_t> variables_;
  std::map<std::pair<std::string, std::string>, std::size_t> constants_;
  std::optional<std::size_t> external_;
};

void GraphBuilder::Build() {
  // Instruction nodes, first index of every block, and function entries.
  std::map<std::string, std::size_t> function_entry;
  std::vector<std::vector<std::size_t>> block_start(module_.functions.size());
  std::vector<const IrInstruction*> instructions;
  for (std::size_t f = 0; f < module_.functions.size(); ++f) {
    const IrFunction& fn = module_.functions[f];
    for (const IrBlock& block : fn.blocks) {
      block_start[f].push_back(graph_.nodes.size());
      for (const IrInstruction& inst : block.instructions) {
        AddNode(NodeKind::kInstruction, inst.opcode, inst.full_text);
        instructions.push_back(&inst);
      }
    }
    if (!fn.is_declaration && !fn.blocks.empty() &&
        !fn.blocks.front().instructions.empty()) {
      function_entry[fn.name] = block_start[f].front();
    }
  }
  if (instructions.empty()) {
    throw Error(ErrorCode::kEmptyModule,
                module_.source_path + ": no function bodies");
  }

  // Control flow.
  for (std::size_t f = 0; f < module_.functions.size(); ++f) {
    const IrFunction& fn = module_.functions[f];
    std::map<std::string, std::size_t> label_start;
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      if (!fn.blocks[b].instructions.empty()) {
        label_start.emplace(fn.blocks[b].label, block_start[f][b]);
      }
    }
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      const IrBlock& block = fn.blocks[b];
      if (block.instructions.empty()) continue;
      const std::size_t first = block_start[f][b];
      const std::size_t last = first + block.instructions.size() - 1;
      for (std::size_t i = first; i < last; ++i) AddEdge(Relation::kControl, i, i + 1, 0);
      const IrInstruction& term = block.instructions.back();
      if (term.is_terminator) {
        const auto successors = TerminatorSuccessors(term);
        for (std::size_t s = 0; s < successors.size(); ++s) {
          auto it = label_start.find(successors[s]);
          if (it != label_start.end()) AddEdge(Relation::kControl, last, it->second, s);
        }
      } else if (b + 1 < fn.blocks.size() && !fn.blocks[b + 1].instructions.empty()) {
        AddEdge(Relation::kControl, last, block_start[f][b + 1], 0);
      }
    }
  }

  // Data flow. Uses of a variable that is defined later (phi) still attach to
  // the same node, so variables are keyed by (function, id).
  std::size_t node = 0;
  for (std::size_t f = 0; f < module_.functions.size(); ++f) {
    const IrFunction& fn = module_.functions[f];
    std::map<std::string, std::string> argument_types;
    for (const IrArgument& a : fn.arguments) argument_types[a.id] = a.type;
    for (const IrBlock& block : fn.blocks) {
      for (const IrInstruction& inst : block.instructions) {
        for (const IrOperand& op : inst.operands) {
          const bool direct_call =
              inst.callee && op.position == 0 && op.kind == OperandKind::kGlobal &&
              module_.FindFunction(op.value) != nullptr;
          if (direct_call) continue;
          std::size_t src;
          if (op.kind == OperandKind::kLocal) {
            std::string type = op.type;
            if (auto it = argument_types.find(op.value); it != argument_types.end()) {
              type = it->second;
            }
            src = VariableNode(f, op.value, type);
          } else {
            src = ConstantNode(op);
          }
          AddEdge(Relation::kData, src, node, op.position);
        }
        if (inst.result_id) {
          AddEdge(Relation::kData, node,
                  VariableNode(f, *inst.result_id, inst.result_type), 0);
        }
        ++node;
      }
    }
  }

  // Call flow.
  node = 0;
  for (const IrFunction& fn : module_.functions) {
    for (const IrBlock& block : fn.blocks) {
      for (const IrInstruction& inst : block.instructions) {
        if (inst.callee && inst.callee->front() == '@') {
          auto it = function_entry.find(*inst.callee);
          AddEdge(Relation::kCall, node,
                  it != function_entry.end() ? it->second : ExternalNode(), 0);
        }
        ++node;
      }
    }
  }
}

}  // namespace

ProgramGraph BuildGraph(const IrModule& module, Origin origin,
                        std::string language) {
  ProgramGraph graph;
  graph.source_path = module.source_path;
  graph.origin = origin;
  graph.language = std::move(language);
  GraphBuilder(module, graph).Build();
  return graph;
}

GraphStats ComputeGraphStats(const ProgramGraph& graph) {
  GraphStats stats;
  stats.node_count = graph.nodes.size();
  stats.edge_count = graph.edges.size();
  for (const GraphNode& n : graph.nodes) {
    ++stats.node_count_by_kind[static_cast<std::size_t>(n.kind)];
  }
  for (const GraphEdge& e : graph.edges) {
    ++stats.edge_count_by_relation[static_cast<std::size_t>(e.relation)];
  }
  return stats;
}

std::string SerializeGraph(const ProgramGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const GraphNode& n : graph.nodes) {
    nodes.push_back({{"kind", NodeKindName(n.kind)},
                     {"text", n.text},
                     {"full_text", n.full_text}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const GraphEdge& e : graph.edges) {
    edges.push_back({{"rel", RelationName(e.relation)},
                     {"src", e.src},
                     {"dst", e.dst},
                     {"pos", e.position}});
  }
  nlohmann::json doc = {{"origin", OriginName(graph.origin)},
                        {"language", graph.language},
                        {"source_path", graph.source_path},
                        {"nodes", std::move(nodes)},
                        {"edges", std::move(edges)}};
  return std::string(kGraphMagic) + doc.dump() + "\n";
}

ProgramGraph DeserializeGraph(std::string_view bytes) {
  if (bytes.substr(0, kGraphMagic.size()) != kGraphMagic) {
    if (bytes.substr(0, 6) == "PGRAPH") {
      throw Error(ErrorCode::kVersionMismatch,
                  "unsupported graph format " +
                      std::string(bytes.substr(0, bytes.find('\n'))));
    }
    throw Error(ErrorCode::kCorruptPayload, "missing PGRAPH1 header");
  }
  ProgramGraph graph;
  try {
    const auto doc = nlohmann::json::parse(bytes.substr(kGraphMagic.size()));
    graph.origin = ParseOrigin(doc.at("origin").get<std::string>());
    graph.language = doc.at("language").get<std::string>();
    graph.source_path = doc.value("source_path", std::string());
    for (const auto& n : doc.at("nodes")) {
      graph.nodes.push_back(GraphNode{ParseNodeKind(n.at("kind").get<std::string>()),
                                      n.at("text").get<std::string>(),
                                      n.at("full_text").get<std::string>(),
                                      {}});
    }
    for (const auto& e : doc.at("edges")) {
      graph.edges.push_back(GraphEdge{ParseRelation(e.at("rel").get<std::string>()),
                                      e.at("src").get<std::size_t>(),
                                      e.at("dst").get<std::size_t>(),
                                      e.at("pos").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptPayload) throw;
    throw Error(ErrorCode::kCorruptPayload, e.what());
  }
  if (std::string problem = ValidateGraph(graph); !problem.empty()) {
    throw Error(ErrorCode::kCorruptPayload, problem);
  }
  return graph;
}

std::string ValidateGraph(const ProgramGraph& graph) {
  const std::size_t n = graph.nodes.size();
  std::vector<bool> has_data(n, false);
  for (const GraphEdge& e : graph.edges) {
    if (e.src >= n || e.dst >= n) {
      return "edge endpoint out of range (" + std::to_string(e.src) + " -> " +
             std::to_string(e.dst) + ")";
    }
    if (e.relation == Relation::kData) has_data[e.src] = has_data[e.dst] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const GraphNode& node = graph.nodes[i];
    if (node.text.empty()) return "node " + std::to_string(i) + " has empty text";
    if (node.kind != NodeKind::kInstruction && !has_data[i]) {
      return "node " + std::to_string(i) + " has no data edge";
    }
    if (node.kind == NodeKind::kInstruction && node.full_text.empty() &&
        node.text != kExternalNodeText) {
      return "instruction node " + std::to_string(i) + " has empty full_text";
    }
  }
  return {};
}

}  // namespace gbm
