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

#ifndef GBM_IR_MODULE_H_
#define GBM_IR_MODULE_H_

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Tolerant reader for the textual LLVM IR subset that front-ends and
// decompilers emit. Structural understanding (def-use, CFG) covers alloca,
// load, store, br, switch, ret, call, phi, getelementptr, icmp, fcmp, select,
// binary arithmetic/logic and casts. Any other instruction keeps its opcode
// and gets operands by an identifier scan.
namespace gbm {

enum class OperandKind { kLocal, kGlobal, kConstant };

struct IrOperand {
  OperandKind kind = OperandKind::kLocal;
  // `%name`, `@name`, or the literal text (e.g. "0", "null", "c\"ab\\00\"").
  std::string value;
  // Type text as written, or inherited from a sibling operand. May be empty.
  std::string type;
  // Index among the instruction's value operands, counted left to right.
  std::size_t position = 0;

  bool is_identifier() const { return kind != OperandKind::kConstant; }
  bool operator==(const IrOperand&) const = default;
};

struct IrInstruction {
  // Verbatim instruction with comments, metadata attachments and trailing
  // attribute-group references removed.
  std::string full_text;
  std::string opcode;
  std::optional<std::string> result_id;
  std::string result_type;
  // Value operands in textual order. Branch targets, phi predecessor labels
  // and named types are never operands.
  std::vector<IrOperand> operands;
  // Terminators only; labels without the leading '%'.
  std::vector<std::string> successor_labels;
  // Direct or indirect callee of call/invoke.
  std::optional<std::string> callee;
  bool is_terminator = false;
  // False when the opcode fell back to the identifier scan.
  bool structurally_parsed = true;

  // The local (`%`) and global (`@`) operands, in order.
  std::vector<IrOperand> OperandIds() const;

  bool operator==(const IrInstruction&) const = default;
};

struct IrBlock {
  std::string label;
  std::vector<IrInstruction> instructions;

  bool operator==(const IrBlock&) const = default;
};

struct IrArgument {
  std::string id;
  std::string type;

  bool operator==(const IrArgument&) const = default;
};

struct IrFunction {
  std::string name;  // '@'-prefixed
  // The `define ... {` or `declare ...` line.
  std::string header;
  std::vector<IrArgument> arguments;
  std::vector<IrBlock> blocks;
  bool is_declaration = false;

  const IrBlock* FindBlock(std::string_view label) const;
  bool operator==(const IrFunction&) const = default;
};

struct IrGlobal {
  std::string name;  // '@'-prefixed
  std::string text;

  bool operator==(const IrGlobal&) const = default;
};

struct IrModule {
  std::vector<IrFunction> functions;
  std::vector<IrGlobal> globals;
  // `%name = type ...` lines and the set of names they define.
  std::vector<std::string> type_definitions;
  std::set<std::string> named_types;
  std::string source_path;

  const IrFunction* FindFunction(std::string_view name) const;
  std::size_t InstructionCount() const;
  bool operator==(const IrModule&) const = default;
};

// Throws Error(kMalformedModule) on empty input, unbalanced braces, an
// unterminated or empty function body, or duplicate function/block names.
// Unknown instructions never cause a failure.
IrModule ParseModule(std::string_view text, std::string source_path);

// Parses a single instruction line. `named_types` lists `%name` identifiers
// that denote types rather than values.
IrInstruction ParseInstruction(std::string_view line,
                               const std::set<std::string>& named_types = {});

// Successor labels of a block-ending instruction in textual order:
// br -> [target] or [true, false]; switch -> [default, cases...];
// ret/unreachable/unknown -> [].
std::vector<std::string> TerminatorSuccessors(const IrInstruction& inst);

bool IsTerminatorOpcode(std::string_view opcode);

// Removes `;` comments outside string literals.
std::string StripComment(std::string_view line);
// Removes trailing `, !kind !N` attachments and ` #N` attribute groups.
std::string StripMetadata(std::string_view instruction);

// Emits one definition per line and one instruction per line; parsing the
// result yields a structurally equal module.
std::string RenderModule(const IrModule& module);

}  // namespace gbm

#endif  // GBM_IR_MODULE_H_
