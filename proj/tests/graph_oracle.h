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

#ifndef GBM_TESTS_GRAPH_ORACLE_H_
#define GBM_TESTS_GRAPH_ORACLE_H_

#include <cstddef>
#include <set>
#include <string>
#include <tuple>

#include "gbm/program_graph.h"

namespace gbm {

// Edge with both endpoints replaced by stable names: `I<k>` for the k-th
// instruction of the file, `X` for the external callee, `V:%name` for
// variables and `C:<type> <value>` / `G:@name` for constants and globals.
using NamedEdge = std::tuple<std::string, std::string, std::string, std::size_t>;

struct OracleResult {
  std::multiset<NamedEdge> edges;
  // Distinct (function, name) variables.
  std::size_t variables = 0;
  std::size_t instructions = 0;
};

// Def-use and control-flow edges read straight from the text of a fixture,
// without the library parser. Fixtures keep one instruction per line (a
// switch may span lines), label every block and avoid constant
// expressions.
OracleResult RunOracle(const std::string& text);

// The edges of `graph` named the same way.
std::multiset<NamedEdge> NamedGraphEdges(const ProgramGraph& graph);

// Edges of one relation ("control", "data" or "call").
std::multiset<NamedEdge> EdgesOf(const std::multiset<NamedEdge>& edges, const std::string& rel);

// Empty when the graph built from `text` matches the oracle exactly;
// otherwise a description of the first mismatch.
std::string CompareWithOracle(const std::string& text, const std::string& name);

}  // namespace gbm

#endif  // GBM_TESTS_GRAPH_ORACLE_H_
