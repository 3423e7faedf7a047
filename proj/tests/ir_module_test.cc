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

#include "gbm/ir_module.h"

#include <gtest/gtest.h>

#include "gbm/io.h"
#include "gbm/status.h"
#include "test_util.h"

namespace gbm {
namespace {

std::vector<std::string> Values(const IrInstruction& inst) {
  std::vector<std::string> out;
  for (const IrOperand& op : inst.operands) out.push_back(op.value);
  return out;
}

TEST(IrModuleTest, LoadOperandCarriesPointerType) {
  const IrInstruction inst = ParseInstruction("%16 = load i32, i32* %15, align 4", {});
  EXPECT_EQ(inst.opcode, "load");
  ASSERT_EQ(inst.operands.size(), 1u);
  EXPECT_EQ(inst.operands[0].value, "%15");
  EXPECT_EQ(inst.operands[0].type, "i32*");
  EXPECT_EQ(inst.result_id, "%16");
}

TEST(IrModuleTest, BinaryOperatorsHaveTwoPositionedOperands) {
  const IrInstruction inst = ParseInstruction("%3 = add nsw i32 %1, %2", {});
  EXPECT_EQ(Values(inst), (std::vector<std::string>{"%1", "%2"}));
  EXPECT_EQ(inst.operands[1].position, 1u);
  EXPECT_EQ(inst.result_type, "i32");
}

TEST(IrModuleTest, BranchSuccessorsInTextOrder) {
  const IrInstruction inst = ParseInstruction("br i1 %c, label %t, label %f", {});
  EXPECT_TRUE(inst.is_terminator);
  EXPECT_EQ(TerminatorSuccessors(inst), (std::vector<std::string>{"t", "f"}));
  EXPECT_EQ(Values(inst), (std::vector<std::string>{"%c"}));
}

TEST(IrModuleTest, SwitchListsDefaultFirst) {
  const IrInstruction inst =
      ParseInstruction("switch i32 %x, label %d [ i32 0, label %a i32 1, label %b ]", {});
  EXPECT_EQ(TerminatorSuccessors(inst), (std::vector<std::string>{"d", "a", "b"}));
}

TEST(IrModuleTest, CallWithConstantExpressionArgument) {
  const IrInstruction inst = ParseInstruction(
      "%5 = call i32 (i8*, ...) @printf(i8* getelementptr inbounds ([4 x i8], [4 x i8]* @.str, "
      "i64 0, i64 0), i32 %4)",
      {});
  EXPECT_EQ(inst.callee, "@printf");
  EXPECT_EQ(Values(inst), (std::vector<std::string>{"@printf", "@.str", "%4"}));
}

TEST(IrModuleTest, CallSkipsMetadataArguments) {
  const IrInstruction inst = ParseInstruction(
      "call void @llvm.dbg.declare(metadata i32* %1, metadata !12, metadata !DIExpression())", {});
  EXPECT_EQ(Values(inst), (std::vector<std::string>{"@llvm.dbg.declare"}));
}

TEST(IrModuleTest, PhiKeepsValuesOnly) {
  const IrInstruction inst = ParseInstruction("%r = phi i32 [ %a, %l1 ], [ 7, %l2 ]", {});
  EXPECT_EQ(Values(inst), (std::vector<std::string>{"%a", "7"}));
}

TEST(IrModuleTest, AllocaResultIsPointer) {
  const IrInstruction inst = ParseInstruction("%p = alloca i32, align 4", {});
  EXPECT_TRUE(inst.operands.empty());
  EXPECT_EQ(inst.result_type, "i32*");
}

TEST(IrModuleTest, StructPointerTypesAreRecognised) {
  const IrInstruction inst = ParseInstruction("%v = load %struct.S*, %struct.S** %p", {});
  ASSERT_EQ(inst.operands.size(), 1u);
  EXPECT_EQ(inst.operands[0].value, "%p");
}

TEST(IrModuleTest, UnknownInstructionsFallBackToIdentifierScan) {
  const IrInstruction inst =
      ParseInstruction("%old = atomicrmw add i32* %ptr, i32 1 seq_cst", {});
  EXPECT_FALSE(inst.structurally_parsed);
  EXPECT_EQ(Values(inst).front(), "%ptr");
}

TEST(IrModuleTest, CommentsAndMetadataAreStripped) {
  EXPECT_EQ(StripComment("%a = add i32 1, 2 ; note"), "%a = add i32 1, 2 ");
  EXPECT_EQ(StripMetadata("%a = add i32 1, 2, !dbg !7"), "%a = add i32 1, 2");
}

TEST(IrModuleTest, RenderThenParseIsStable) {
  for (const std::string& name : FixtureNames()) {
    const IrModule m = ParseModule(ReadFileBytes(FixturePath(name)), name);
    const IrModule again = ParseModule(RenderModule(m), name);
    EXPECT_EQ(RenderModule(again), RenderModule(m)) << name;
    EXPECT_EQ(again.InstructionCount(), m.InstructionCount()) << name;
  }
}

TEST(IrModuleTest, FunctionsAndDeclarationsAreSeparated) {
  const IrModule m = ParseModule(ReadFileBytes(FixturePath("calls.ll")), "calls.ll");
  ASSERT_EQ(m.functions.size(), 3u);
  EXPECT_TRUE(m.functions[0].is_declaration);
  EXPECT_EQ(m.functions[2].name, "@main");
  EXPECT_EQ(m.functions[2].arguments.size(), 1u);
  EXPECT_EQ(m.InstructionCount(), 8u);
}

}  // namespace
}  // namespace gbm
