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

#include "gbm/synthetic_corpus.h"

#include <map>
#include <regex>

#include "gbm/io.h"
#include "gbm/ir_module.h"
#include "gbm/random.h"

namespace gbm {

namespace {

struct TaskTemplate {
  const char* name;
  const char* source;
  const char* binary;
};

// Source templates read like optimized front-end output: SSA values, phis,
// 32-bit ints. Binary templates read like lifted machine code: 64-bit ints,
// stack slots, address-derived names.
const std::vector<TaskTemplate>& Templates() {
  static const std::vector<TaskTemplate> templates = {
      {"sum_to_n",
       R"(define i32 @sum_to(i32 %n) {
entry:
  br label %loop
loop:
  %i = phi i32 [ 1, %entry ], [ %i.next, %body ]
  %acc = phi i32 [ 0, %entry ], [ %acc.next, %body ]
  %cmp = icmp sle i32 %i, %n
  br i1 %cmp, label %body, label %exit
body:
  %acc.next = add nsw i32 %acc, %i
  %i.next = add nsw i32 %i, 1
  br label %loop
exit:
  ret i32 %acc
}
)",
       R"(define i64 @function_401126(i64 %arg1) {
dec_label_pc_401126:
  %stack_var_8 = alloca i64
  %stack_var_4 = alloca i64
  store i64 0, i64* %stack_var_8
  store i64 1, i64* %stack_var_4
  br label %dec_label_pc_401140
dec_label_pc_401140:
  %v1 = load i64, i64* %stack_var_4
  %v2 = icmp sgt i64 %v1, %arg1
  br i1 %v2, label %dec_label_pc_401160, label %dec_label_pc_401148
dec_label_pc_401148:
  %v3 = load i64, i64* %stack_var_8
  %v4 = add i64 %v3, %v1
  store i64 %v4, i64* %stack_var_8
  %v5 = add i64 %v1, 1
  store i64 %v5, i64* %stack_var_4
  br label %dec_label_pc_401140
dec_label_pc_401160:
  %v6 = load i64, i64* %stack_var_8
  ret i64 %v6
}
)"},
      {"factorial",
       R"(define i64 @fact(i32 %n) {
entry:
  %start = icmp slt i32 %n, 2
  br i1 %start, label %done, label %loop
loop:
  %k = phi i32 [ %n, %entry ], [ %k.dec, %loop ]
  %prod = phi i64 [ 1, %entry ], [ %prod.next, %loop ]
  %k.wide = sext i32 %k to i64
  %prod.next = mul nsw i64 %prod, %k.wide
  %k.dec = add nsw i32 %k, -1
  %more = icmp sgt i32 %k.dec, 1
  br i1 %more, label %loop, label %done
done:
  %result = phi i64 [ 1, %entry ], [ %prod.next, %loop ]
  ret i64 %result
}
)",
       R"(define i64 @function_401150(i64 %arg1) {
dec_label_pc_401150:
  %stack_var_10 = alloca i64
  store i64 1, i64* %stack_var_10
  %v1 = icmp slt i64 %arg1, 2
  br i1 %v1, label %dec_label_pc_401180, label %dec_label_pc_401162
dec_label_pc_401162:
  %v2 = phi i64 [ %arg1, %dec_label_pc_401150 ], [ %v5, %dec_label_pc_401162 ]
  %v3 = load i64, i64* %stack_var_10
  %v4 = mul i64 %v3, %v2
  store i64 %v4, i64* %stack_var_10
  %v5 = add i64 %v2, -1
  %v6 = icmp sgt i64 %v5, 1
  br i1 %v6, label %dec_label_pc_401162, label %dec_label_pc_401180
dec_label_pc_401180:
  %v7 = load i64, i64* %stack_var_10
  ret i64 %v7
}
)"},
      {"fibonacci",
       R"(define i32 @fib(i32 %n) {
entry:
  br label %loop
loop:
  %a = phi i32 [ 0, %entry ], [ %b, %step ]
  %b = phi i32 [ 1, %entry ], [ %sum, %step ]
  %i = phi i32 [ 0, %entry ], [ %i.next, %step ]
  %cond = icmp slt i32 %i, %n
  br i1 %cond, label %step, label %out
step:
  %sum = add nsw i32 %a, %b
  %i.next = add nsw i32 %i, 1
  br label %loop
out:
  ret i32 %a
}
)",
       R"(define i64 @function_4011a0(i64 %arg1) {
dec_label_pc_4011a0:
  %stack_var_18 = alloca i64
  %stack_var_10 = alloca i64
  %stack_var_8 = alloca i64
  store i64 0, i64* %stack_var_18
  store i64 1, i64* %stack_var_10
  store i64 0, i64* %stack_var_8
  br label %dec_label_pc_4011c0
dec_label_pc_4011c0:
  %v1 = load i64, i64* %stack_var_8
  %v2 = icmp slt i64 %v1, %arg1
  br i1 %v2, label %dec_label_pc_4011c8, label %dec_label_pc_4011f0
dec_label_pc_4011c8:
  %v3 = load i64, i64* %stack_var_18
  %v4 = load i64, i64* %stack_var_10
  %v5 = add i64 %v3, %v4
  store i64 %v4, i64* %stack_var_18
  store i64 %v5, i64* %stack_var_10
  %v6 = add i64 %v1, 1
  store i64 %v6, i64* %stack_var_8
  br label %dec_label_pc_4011c0
dec_label_pc_4011f0:
  %v7 = load i64, i64* %stack_var_18
  ret i64 %v7
}
)"},
      {"gcd",
       R"(define i32 @gcd(i32 %a, i32 %b) {
entry:
  %zero = icmp eq i32 %b, 0
  br i1 %zero, label %end, label %loop
loop:
  %x = phi i32 [ %a, %entry ], [ %y, %loop ]
  %y = phi i32 [ %b, %entry ], [ %rem, %loop ]
  %rem = srem i32 %x, %y
  %done = icmp eq i32 %rem, 0
  br i1 %done, label %end, label %loop
end:
  %g = phi i32 [ %a, %entry ], [ %y, %loop ]
  ret i32 %g
}
)",
       R"(define i64 @function_401200(i64 %arg1, i64 %arg2) {
dec_label_pc_401200:
  %stack_var_10 = alloca i64
  %stack_var_8 = alloca i64
  store i64 %arg1, i64* %stack_var_10
  store i64 %arg2, i64* %stack_var_8
  br label %dec_label_pc_401210
dec_label_pc_401210:
  %v1 = load i64, i64* %stack_var_8
  %v2 = icmp eq i64 %v1, 0
  br i1 %v2, label %dec_label_pc_401230, label %dec_label_pc_401218
dec_label_pc_401218:
  %v3 = load i64, i64* %stack_var_10
  %v4 = srem i64 %v3, %v1
  store i64 %v1, i64* %stack_var_10
  store i64 %v4, i64* %stack_var_8
  br label %dec_label_pc_401210
dec_label_pc_401230:
  %v5 = load i64, i64* %stack_var_10
  ret i64 %v5
}
)"},
      {"string_length",
       R"(define i64 @length(i8* %s) {
entry:
  br label %scan
scan:
  %idx = phi i64 [ 0, %entry ], [ %idx.next, %scan ]
  %ptr = getelementptr inbounds i8, i8* %s, i64 %idx
  %ch = load i8, i8* %ptr, align 1
  %end = icmp eq i8 %ch, 0
  %idx.next = add nuw i64 %idx, 1
  br i1 %end, label %exit, label %scan
exit:
  ret i64 %idx
}
)",
       R"(define i64 @function_401260(i64 %arg1) {
dec_label_pc_401260:
  %stack_var_8 = alloca i64
  store i64 0, i64* %stack_var_8
  br label %dec_label_pc_401270
dec_label_pc_401270:
  %v1 = load i64, i64* %stack_var_8
  %v2 = add i64 %v1, %arg1
  %v3 = inttoptr i64 %v2 to i8*
  %v4 = load i8, i8* %v3
  %v5 = icmp eq i8 %v4, 0
  br i1 %v5, label %dec_label_pc_401290, label %dec_label_pc_401284
dec_label_pc_401284:
  %v6 = add i64 %v1, 1
  store i64 %v6, i64* %stack_var_8
  br label %dec_label_pc_401270
dec_label_pc_401290:
  ret i64 %v1
}
)"},
      {"array_max",
       R"(define i32 @array_max(i32* %xs, i32 %n) {
entry:
  %first = load i32, i32* %xs, align 4
  br label %loop
loop:
  %i = phi i32 [ 1, %entry ], [ %i.next, %loop.body ]
  %best = phi i32 [ %first, %entry ], [ %best.next, %loop.body ]
  %cmp = icmp slt i32 %i, %n
  br i1 %cmp, label %loop.body, label %exit
loop.body:
  %wide = sext i32 %i to i64
  %slot = getelementptr inbounds i32, i32* %xs, i64 %wide
  %x = load i32, i32* %slot, align 4
  %gt = icmp sgt i32 %x, %best
  %best.next = select i1 %gt, i32 %x, i32 %best
  %i.next = add nsw i32 %i, 1
  br label %loop
exit:
  ret i32 %best
}
)",
       R"(define i64 @function_4012c0(i64 %arg1, i64 %arg2) {
dec_label_pc_4012c0:
  %stack_var_10 = alloca i64
  %stack_var_8 = alloca i64
  %v1 = inttoptr i64 %arg1 to i32*
  %v2 = load i32, i32* %v1
  %v3 = sext i32 %v2 to i64
  store i64 %v3, i64* %stack_var_10
  store i64 1, i64* %stack_var_8
  br label %dec_label_pc_4012e0
dec_label_pc_4012e0:
  %v4 = load i64, i64* %stack_var_8
  %v5 = icmp slt i64 %v4, %arg2
  br i1 %v5, label %dec_label_pc_4012e8, label %dec_label_pc_401310
dec_label_pc_4012e8:
  %v6 = mul i64 %v4, 4
  %v7 = add i64 %arg1, %v6
  %v8 = inttoptr i64 %v7 to i32*
  %v9 = load i32, i32* %v8
  %v10 = sext i32 %v9 to i64
  %v11 = load i64, i64* %stack_var_10
  %v12 = icmp sgt i64 %v10, %v11
  %v13 = select i1 %v12, i64 %v10, i64 %v11
  store i64 %v13, i64* %stack_var_10
  %v14 = add i64 %v4, 1
  store i64 %v14, i64* %stack_var_8
  br label %dec_label_pc_4012e0
dec_label_pc_401310:
  %v15 = load i64, i64* %stack_var_10
  ret i64 %v15
}
)"},
      {"sum_of_squares",
       R"(@.fmt = private unnamed_addr constant [4 x i8] c"%d\0A\00", align 1

declare i32 @printf(i8*, ...)

define i32 @square(i32 %x) {
entry:
  %sq = mul nsw i32 %x, %x
  ret i32 %sq
}

define i32 @main() {
entry:
  br label %loop
loop:
  %i = phi i32 [ 1, %entry ], [ %i.next, %loop ]
  %total = phi i32 [ 0, %entry ], [ %total.next, %loop ]
  %s = call i32 @square(i32 %i)
  %total.next = add nsw i32 %total, %s
  %i.next = add nsw i32 %i, 1
  %again = icmp sle i32 %i.next, 10
  br i1 %again, label %loop, label %print
print:
  %r = call i32 (i8*, ...) @printf(i8* getelementptr inbounds ([4 x i8], [4 x i8]* @.fmt, i64 0, i64 0), i32 %total.next)
  ret i32 0
}
)",
       R"(@global_var_402004 = constant [4 x i8] c"%d\0A\00"

declare i64 @printf(i64, ...)

define i64 @function_401130(i64 %arg1) {
dec_label_pc_401130:
  %v1 = mul i64 %arg1, %arg1
  ret i64 %v1
}

define i64 @main(i64 %argc, i8** %argv) {
dec_label_pc_401140:
  %stack_var_10 = alloca i64
  %stack_var_8 = alloca i64
  store i64 0, i64* %stack_var_10
  store i64 1, i64* %stack_var_8
  br label %dec_label_pc_401150
dec_label_pc_401150:
  %v1 = load i64, i64* %stack_var_8
  %v2 = call i64 @function_401130(i64 %v1)
  %v3 = load i64, i64* %stack_var_10
  %v4 = add i64 %v3, %v2
  store i64 %v4, i64* %stack_var_10
  %v5 = add i64 %v1, 1
  store i64 %v5, i64* %stack_var_8
  %v6 = icmp slt i64 %v5, 11
  br i1 %v6, label %dec_label_pc_401150, label %dec_label_pc_401180
dec_label_pc_401180:
  %v7 = ptrtoint [4 x i8]* @global_var_402004 to i64
  %v8 = call i64 (i64, ...) @printf(i64 %v7, i64 %v4)
  ret i64 0
}
)"},
      {"clamp",
       R"(define i32 @clamp(i32 %x, i32 %lo, i32 %hi) {
entry:
  %below = icmp slt i32 %x, %lo
  br i1 %below, label %ret.lo, label %check.hi
check.hi:
  %above = icmp sgt i32 %x, %hi
  br i1 %above, label %ret.hi, label %ret.x
ret.lo:
  br label %join
ret.hi:
  br label %join
ret.x:
  br label %join
join:
  %r = phi i32 [ %lo, %ret.lo ], [ %hi, %ret.hi ], [ %x, %ret.x ]
  ret i32 %r
}
)",
       R"(define i64 @function_401340(i64 %arg1, i64 %arg2, i64 %arg3) {
dec_label_pc_401340:
  %stack_var_8 = alloca i64
  %v1 = icmp slt i64 %arg1, %arg2
  br i1 %v1, label %dec_label_pc_401360, label %dec_label_pc_40134c
dec_label_pc_40134c:
  %v2 = icmp sgt i64 %arg1, %arg3
  br i1 %v2, label %dec_label_pc_401370, label %dec_label_pc_401358
dec_label_pc_401358:
  store i64 %arg1, i64* %stack_var_8
  br label %dec_label_pc_401378
dec_label_pc_401360:
  store i64 %arg2, i64* %stack_var_8
  br label %dec_label_pc_401378
dec_label_pc_401370:
  store i64 %arg3, i64* %stack_var_8
  br label %dec_label_pc_401378
dec_label_pc_401378:
  %v3 = load i64, i64* %stack_var_8
  ret i64 %v3
}
)"},
  };
  return templates;
}

// Consistently renames every local identifier (values, arguments and block
// labels) with a variant-specific scheme.
std::string RenameLocals(const std::string& text, std::size_t scheme, Rng& rng) {
  // Quoted strings are matched so that format specifiers inside them stay
  // untouched.
  static const std::regex kLocal(R"("[^"]*"|%([-a-zA-Z$._][-a-zA-Z$._0-9]*|[0-9]+))");
  static const std::regex kLabelLine(R"((^|\n)([-a-zA-Z$._0-9]+):)");
  const std::uint64_t salt = rng.NextU64() & 0xffff;
  std::map<std::string, std::string> names;
  auto fresh = [&](const std::string& old) {
    auto [it, inserted] = names.try_emplace(old);
    if (inserted) {
      const std::size_t k = names.size();
      char buf[48];
      switch (scheme % 4) {
        case 0: std::snprintf(buf, sizeof(buf), "t%zu", k); break;
        case 1: std::snprintf(buf, sizeof(buf), "r%zu_%04llx", k,
                              static_cast<unsigned long long>(salt)); break;
        case 2: std::snprintf(buf, sizeof(buf), "val.%zu", k); break;
        default: std::snprintf(buf, sizeof(buf), "x%llx_%zu",
                               static_cast<unsigned long long>(salt), k); break;
      }
      it->second = buf;
    }
    return it->second;
  };
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kLocal);
       it != std::sregex_iterator(); ++it) {
    out.append(text, last, it->position() - last);
    out += (*it)[1].matched ? "%" + fresh((*it)[1].str()) : it->str();
    last = it->position() + it->length();
  }
  out.append(text, last);
  std::string relabeled;
  last = 0;
  for (auto it = std::sregex_iterator(out.begin(), out.end(), kLabelLine);
       it != std::sregex_iterator(); ++it) {
    relabeled.append(out, last, it->position() - last);
    relabeled += (*it)[1].str() + fresh((*it)[2].str()) + ":";
    last = it->position() + it->length();
  }
  relabeled.append(out, last);
  return relabeled;
}

// Shuffles non-entry blocks and inserts up to three dead instructions.
void Perturb(IrModule& module, Origin origin, Rng& rng) {
  const std::string int_type = origin == Origin::kSource ? "i32" : "i64";
  std::size_t pad_id = 0;
  for (IrFunction& fn : module.functions) {
    if (fn.is_declaration || fn.blocks.size() < 2) continue;
    for (std::size_t i = fn.blocks.size() - 1; i > 1; --i) {
      std::swap(fn.blocks[i], fn.blocks[1 + rng.Index(i)]);
    }
  }
  const std::size_t pads = rng.Index(4);
  for (std::size_t p = 0; p < pads; ++p) {
    std::vector<IrBlock*> blocks;
    for (IrFunction& fn : module.functions) {
      for (IrBlock& b : fn.blocks) blocks.push_back(&b);
    }
    if (blocks.empty()) return;
    IrBlock& block = *blocks[rng.Index(blocks.size())];
    std::size_t first = 0;
    while (first < block.instructions.size() && block.instructions[first].opcode == "phi") {
      ++first;
    }
    const std::size_t last = block.instructions.empty() ? 0 : block.instructions.size() - 1;
    const std::size_t at = first >= last ? first : first + rng.Index(last - first + 1);
    const std::string name = "%pad" + std::to_string(pad_id++);
    std::string text;
    switch (rng.Index(3)) {
      case 0: text = name + " = add " + int_type + " 0, 0"; break;
      case 1: text = name + " = or " + int_type + " 0, 0"; break;
      default: text = name + " = bitcast i8* null to i8*"; break;
    }
    block.instructions.insert(block.instructions.begin() + static_cast<std::ptrdiff_t>(at),
                              ParseInstruction(text, module.named_types));
  }
}

}  // namespace

std::vector<std::string> SyntheticTaskNames() {
  std::vector<std::string> names;
  for (const TaskTemplate& t : Templates()) names.emplace_back(t.name);
  return names;
}

std::vector<SyntheticFile> GenerateSyntheticCorpus(std::uint64_t seed,
                                                   std::size_t variants_per_side) {
  std::vector<SyntheticFile> files;
  const auto& templates = Templates();
  for (std::size_t t = 0; t < templates.size(); ++t) {
    for (Origin origin : {Origin::kSource, Origin::kBinary}) {
      const char* base = origin == Origin::kSource ? templates[t].source : templates[t].binary;
      for (std::size_t v = 0; v < variants_per_side; ++v) {
        Rng rng(DeriveSeed(seed, (t * 2 + (origin == Origin::kBinary)) * 1000 + v));
        IrModule module = ParseModule(base, "");
        if (v > 0) Perturb(module, origin, rng);
        SyntheticFile f;
        f.task = templates[t].name;
        f.origin = origin;
        f.language = "c";
        f.relative_path = f.task + "/" + std::string(OriginName(origin)) + "/c/v" +
                          std::to_string(v) + ".ll";
        f.text = RenameLocals(RenderModule(module), v + t, rng);
        files.push_back(std::move(f));
      }
    }
  }
  return files;
}

std::size_t WriteSyntheticCorpus(const std::filesystem::path& dir, std::uint64_t seed,
                                 std::size_t variants_per_side) {
  const auto files = GenerateSyntheticCorpus(seed, variants_per_side);
  for (const SyntheticFile& f : files) WriteFileBytes(dir / f.relative_path, f.text);
  return files.size();
}

}  // namespace gbm
