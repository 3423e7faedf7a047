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

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gbm/status.h"

namespace gbm {
namespace {

// ---------------------------------------------------------------------------
// Lexing

enum class TokKind { kLocal, kGlobal, kWord, kString, kPunct, kMeta, kAttrGroup };

struct Tok {
  TokKind kind;
  std::size_t begin;
  std::size_t end;
  std::string text;

  bool Is(TokKind k, std::string_view t) const { return kind == k && text == t; }
  bool IsPunct(char c) const {
    return kind == TokKind::kPunct && text.size() == 1 && text[0] == c;
  }
  bool IsWord(std::string_view t) const { return Is(TokKind::kWord, t); }
};

bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '$' ||
         c == '.' || c == '_';
}

bool IsWordChar(char c) { return IsIdentChar(c) || c == '+'; }

std::vector<Tok> Lex(std::string_view s) {
  std::vector<Tok> toks;
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto read_quoted = [&](std::size_t start) {
    // s[start] == '"'; returns index one past the closing quote.
    std::size_t j = start + 1;
    while (j < n && s[j] != '"') ++j;
    return std::min(n, j + 1);
  };
  while (i < n) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    TokKind kind;
    if ((c == '%' || c == '@') && i + 1 < n &&
        (s[i + 1] == '"' || IsIdentChar(s[i + 1]))) {
      kind = c == '%' ? TokKind::kLocal : TokKind::kGlobal;
      if (s[i + 1] == '"') {
        i = read_quoted(i + 1);
      } else {
        i += 1;
        while (i < n && IsIdentChar(s[i])) ++i;
      }
    } else if (c == '!') {
      kind = TokKind::kMeta;
      ++i;
      while (i < n && IsIdentChar(s[i])) ++i;
    } else if (c == '#' && i + 1 < n &&
               std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      kind = TokKind::kAttrGroup;
      ++i;
      while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    } else if (c == '"') {
      kind = TokKind::kString;
      i = read_quoted(i);
    } else if (c == 'c' && i + 1 < n && s[i + 1] == '"') {
      kind = TokKind::kString;
      i = read_quoted(i + 1);
    } else if (IsWordChar(c)) {
      kind = TokKind::kWord;
      while (i < n && IsWordChar(s[i])) ++i;
    } else {
      kind = TokKind::kPunct;
      ++i;
    }
    toks.push_back(Tok{kind, start, i, std::string(s.substr(start, i - start))});
  }
  return toks;
}

bool IsOpen(const Tok& t) {
  return t.IsPunct('(') || t.IsPunct('[') || t.IsPunct('{') || t.IsPunct('<');
}
bool IsClose(const Tok& t) {
  return t.IsPunct(')') || t.IsPunct(']') || t.IsPunct('}') || t.IsPunct('>');
}

// Index one past the group closing the opener at `open`.
std::size_t MatchGroup(const std::vector<Tok>& toks, std::size_t open,
                       std::size_t end) {
  int depth = 0;
  for (std::size_t j = open; j < end; ++j) {
    if (IsOpen(toks[j])) ++depth;
    if (IsClose(toks[j]) && --depth == 0) return j + 1;
  }
  return end;
}

struct Range {
  std::size_t begin;
  std::size_t end;
  bool empty() const { return begin >= end; }
};

std::vector<Range> SplitTopLevel(const std::vector<Tok>& toks, Range r) {
  std::vector<Range> pieces;
  int depth = 0;
  std::size_t start = r.begin;
  for (std::size_t j = r.begin; j < r.end; ++j) {
    if (IsOpen(toks[j])) ++depth;
    if (IsClose(toks[j])) --depth;
    if (depth == 0 && toks[j].IsPunct(',')) {
      pieces.push_back({start, j});
      start = j + 1;
    }
  }
  if (start < r.end || !pieces.empty()) pieces.push_back({start, r.end});
  return pieces;
}

// ---------------------------------------------------------------------------
// Instruction parsing

const std::unordered_set<std::string_view>& TypeKeywords() {
  static const std::unordered_set<std::string_view> k = {
      "void",   "half",      "bfloat", "float",   "double",   "fp128",
      "x86_fp80", "ppc_fp128", "label", "metadata", "ptr",    "token",
      "opaque", "x86_mmx",   "x86_amx"};
  return k;
}

bool IsIntType(std::string_view w) {
  return w.size() > 1 && w[0] == 'i' &&
         std::all_of(w.begin() + 1, w.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool IsTypeWord(std::string_view w) {
  return IsIntType(w) || TypeKeywords().contains(w);
}

const std::unordered_set<std::string_view>& BinaryOpcodes() {
  static const std::unordered_set<std::string_view> k = {
      "add",  "sub",  "mul",  "udiv", "sdiv", "urem", "srem", "shl",  "lshr",
      "ashr", "and",  "or",   "xor",  "fadd", "fsub", "fmul", "fdiv", "frem"};
  return k;
}

const std::unordered_set<std::string_view>& CastOpcodes() {
  static const std::unordered_set<std::string_view> k = {
      "trunc",   "zext",    "sext",     "fptrunc",  "fpext",
      "fptoui",  "fptosi",  "uitofp",   "sitofp",   "ptrtoint",
      "inttoptr", "bitcast", "addrspacecast"};
  return k;
}

// Flags and keywords that may sit between an opcode and its first type.
const std::unordered_set<std::string_view>& SkippableWords() {
  static const std::unordered_set<std::string_view> k = {
      "nuw",   "nsw",      "exact",    "disjoint", "fast",     "nnan",
      "ninf",  "nsz",      "arcp",     "contract", "afn",      "reassoc",
      "samesign", "nneg",  "inbounds", "nusw",     "inrange",  "volatile",
      "atomic", "inalloca", "tail",    "musttail", "notail",   "ccc",
      "fastcc", "coldcc",  "cc",       "zeroext",  "signext",  "inreg",
      "noalias", "nonnull", "noundef", "dereferenceable",
      "dereferenceable_or_null", "returned", "nocapture", "readonly",
      "writeonly", "immarg", "byval", "sret", "swiftself", "swifterror",
      "nofree", "noinline", "nounwind", "local_unnamed_addr", "unnamed_addr",
      "dso_local", "internal", "private", "external", "linkonce_odr",
      "weak_odr", "hidden", "protected", "default"};
  return k;
}

const std::unordered_set<std::string_view>& AttributePieceStarts() {
  static const std::unordered_set<std::string_view> k = {
      "align", "addrspace", "syncscope", "allocptr", "inalloca"};
  return k;
}

struct FunctionHeader {
  std::string name;
  std::vector<IrArgument> arguments;
};

class InstructionParser {
 public:
  InstructionParser(std::string text, const std::set<std::string>& named_types)
      : text_(std::move(text)), toks_(Lex(text_)), named_types_(named_types) {}

  IrInstruction Parse();
  // Treats the text as a `define`/`declare` line.
  FunctionHeader ParseHeader() const;

 private:
  std::string Slice(std::size_t b, std::size_t e) const {
    if (b >= e) return {};
    return text_.substr(toks_[b].begin, toks_[e - 1].end - toks_[b].begin);
  }

  // Declared `%name = type` identifiers, plus the conventional clang
  // aggregate prefixes so lone instructions parse the same way.
  bool IsNamedType(const Tok& t) const {
    if (t.kind != TokKind::kLocal) return false;
    return named_types_.contains(t.text) || t.text.starts_with("%struct.") ||
           t.text.starts_with("%class.") || t.text.starts_with("%union.");
  }

  bool IsValueIdentifier(std::size_t j) const {
    const Tok& t = toks_[j];
    if (t.kind == TokKind::kGlobal) return true;
    if (t.kind != TokKind::kLocal || IsNamedType(t)) return false;
    return !(j > 0 && toks_[j - 1].IsWord("label"));
  }

  // Length of the type starting at `j`, 0 if none.
  std::size_t TypeLength(std::size_t j, std::size_t end) const;
  std::size_t SkipWords(std::size_t j, std::size_t end) const {
    while (j < end && toks_[j].kind == TokKind::kWord &&
           SkippableWords().contains(toks_[j].text)) {
      ++j;
      // dereferenceable(8), byval(%T) and friends.
      if (j < end && toks_[j].IsPunct('(')) j = MatchGroup(toks_, j, end);
    }
    return j;
  }

  bool IsAttributePiece(Range r) const {
    if (r.empty()) return true;
    const Tok& t = toks_[r.begin];
    return t.kind == TokKind::kMeta ||
           (t.kind == TokKind::kWord && AttributePieceStarts().contains(t.text));
  }

  // Operands of a `type value` piece; `type` receives the piece's type.
  std::vector<IrOperand> ValueOperands(Range r, const std::string& inherited,
                                       std::string* type_out = nullptr) const;
  void AddOperands(std::vector<IrOperand> ops) {
    for (auto& op : ops) {
      op.position = inst_.operands.size();
      inst_.operands.push_back(std::move(op));
    }
  }
  void ScanIdentifiers(std::size_t from);
  void CollectSuccessors(std::size_t from);

  void ParseBinary(std::size_t i, bool is_compare);
  void ParseMemory(std::size_t i, bool first_piece_is_type);
  void ParseGep(std::size_t i);
  void ParseCast(std::size_t i);
  void ParseSelect(std::size_t i);
  void ParsePhi(std::size_t i);
  void ParseCall(std::size_t i);
  void ParseValuePieces(std::size_t i);

  std::string text_;
  std::vector<Tok> toks_;
  const std::set<std::string>& named_types_;
  IrInstruction inst_;
};

std::size_t InstructionParser::TypeLength(std::size_t j, std::size_t end) const {
  if (j >= end) return 0;
  std::size_t k = j;
  const Tok& t = toks_[j];
  if (t.kind == TokKind::kWord && IsTypeWord(t.text)) {
    k = j + 1;
    if (k < end && toks_[k].IsWord("addrspace") && k + 1 < end &&
        toks_[k + 1].IsPunct('(')) {
      k = MatchGroup(toks_, k + 1, end);
    }
  } else if (IsNamedType(t)) {
    k = j + 1;
  } else if (t.IsPunct('[') || t.IsPunct('{') || t.IsPunct('<')) {
    // Only a type if the group holds types: [N x T], {T, ...}, <N x T>, <{...}>.
    const std::size_t close = MatchGroup(toks_, j, end);
    if (close <= j + 1) return 0;
    const Tok& first = toks_[j + 1];
    const bool sized = first.kind == TokKind::kWord && j + 2 < close &&
                       toks_[j + 2].IsWord("x");
    const bool struct_like = (t.IsPunct('{') || (t.IsPunct('<') && first.IsPunct('{'))) &&
                             (TypeLength(j + 1, close - 1) > 0 || first.IsPunct('}'));
    if (!sized && !struct_like) return 0;
    k = close;
  } else {
    return 0;
  }
  while (k < end && toks_[k].IsPunct('*')) ++k;
  // Function type: ret (args)*.
  if (k < end && toks_[k].IsPunct('(')) {
    const std::size_t close = MatchGroup(toks_, k, end);
    if (close < end && toks_[close].IsPunct('*')) {
      k = close;
      while (k < end && toks_[k].IsPunct('*')) ++k;
    }
  }
  return k - j;
}

std::vector<IrOperand> InstructionParser::ValueOperands(
    Range r, const std::string& inherited, std::string* type_out) const {
  std::vector<IrOperand> out;
  std::size_t j = SkipWords(r.begin, r.end);
  std::string type = inherited;
  const std::size_t type_len = TypeLength(j, r.end);
  if (type_len > 0 && j + type_len < r.end) {
    type = Slice(j, j + type_len);
    j += type_len;
  } else if (type_len > 0) {
    // Bare type with no value.
    if (type_out) *type_out = Slice(j, j + type_len);
    return out;
  }
  if (type_out) *type_out = type;
  j = SkipWords(j, r.end);
  for (std::size_t k = j; k < r.end; ++k) {
    if (IsValueIdentifier(k)) {
      out.push_back(IrOperand{toks_[k].kind == TokKind::kGlobal
                                  ? OperandKind::kGlobal
                                  : OperandKind::kLocal,
                              toks_[k].text, type, 0});
    }
  }
  if (!out.empty() || j >= r.end) return out;
  // Literal: the trailing token, or the trailing bracketed group.
  std::size_t lit_begin = r.end - 1;
  if (IsClose(toks_[lit_begin])) {
    for (std::size_t k = j; k < r.end; ++k) {
      if (IsOpen(toks_[k]) && MatchGroup(toks_, k, r.end) == r.end) {
        lit_begin = k;
        break;
      }
    }
  }
  const Tok& last = toks_[lit_begin];
  if (last.kind == TokKind::kWord && IsTypeWord(last.text)) return out;
  if (last.kind == TokKind::kPunct && !IsOpen(last)) return out;
  out.push_back(IrOperand{OperandKind::kConstant, Slice(lit_begin, r.end), type, 0});
  return out;
}

void InstructionParser::ScanIdentifiers(std::size_t from) {
  std::vector<IrOperand> ops;
  for (std::size_t k = from; k < toks_.size(); ++k) {
    if (IsValueIdentifier(k)) {
      ops.push_back(IrOperand{toks_[k].kind == TokKind::kGlobal
                                  ? OperandKind::kGlobal
                                  : OperandKind::kLocal,
                              toks_[k].text, "", 0});
    }
  }
  AddOperands(std::move(ops));
}

void InstructionParser::CollectSuccessors(std::size_t from) {
  for (std::size_t k = from; k + 1 < toks_.size(); ++k) {
    if (toks_[k].IsWord("label") && toks_[k + 1].kind == TokKind::kLocal) {
      std::string label = toks_[k + 1].text.substr(1);
      if (label.size() >= 2 && label.front() == '"' && label.back() == '"') {
        label = label.substr(1, label.size() - 2);
      }
      inst_.successor_labels.push_back(std::move(label));
    }
  }
}

void InstructionParser::ParseBinary(std::size_t i, bool is_compare) {
  i = SkipWords(i, toks_.size());
  if (is_compare && i < toks_.size()) ++i;  // predicate
  auto pieces = SplitTopLevel(toks_, {i, toks_.size()});
  std::string type;
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    std::string piece_type;
    AddOperands(ValueOperands(pieces[p], type, &piece_type));
    if (p == 0) type = piece_type;
  }
  inst_.result_type = is_compare ? "i1" : type;
}

void InstructionParser::ParseMemory(std::size_t i, bool first_piece_is_type) {
  i = SkipWords(i, toks_.size());
  auto pieces = SplitTopLevel(toks_, {i, toks_.size()});
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    if (p == 0 && first_piece_is_type) {
      inst_.result_type = Slice(pieces[p].begin, pieces[p].end);
      continue;
    }
    if (IsAttributePiece(pieces[p])) continue;
    AddOperands(ValueOperands(pieces[p], ""));
  }
}

void InstructionParser::ParseGep(std::size_t i) {
  i = SkipWords(i, toks_.size());
  auto pieces = SplitTopLevel(toks_, {i, toks_.size()});
  for (std::size_t p = 1; p < pieces.size(); ++p) {
    if (IsAttributePiece(pieces[p])) continue;
    std::string type;
    AddOperands(ValueOperands(pieces[p], "", &type));
    if (p == 1) inst_.result_type = type;
  }
}

void InstructionParser::ParseCast(std::size_t i) {
  i = SkipWords(i, toks_.size());
  std::size_t to = i;
  while (to < toks_.size() && !toks_[to].IsWord("to")) ++to;
  AddOperands(ValueOperands({i, to}, ""));
  if (to + 1 < toks_.size()) inst_.result_type = Slice(to + 1, toks_.size());
}

void InstructionParser::ParseSelect(std::size_t i) {
  i = SkipWords(i, toks_.size());
  auto pieces = SplitTopLevel(toks_, {i, toks_.size()});
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    std::string type;
    AddOperands(ValueOperands(pieces[p], "", &type));
    if (p == 1) inst_.result_type = type;
  }
}

void InstructionParser::ParsePhi(std::size_t i) {
  i = SkipWords(i, toks_.size());
  const std::size_t type_len = TypeLength(i, toks_.size());
  const std::string type = Slice(i, i + type_len);
  inst_.result_type = type;
  for (Range piece : SplitTopLevel(toks_, {i + type_len, toks_.size()})) {
    std::size_t open = piece.begin;
    while (open < piece.end && !toks_[open].IsPunct('[')) ++open;
    if (open >= piece.end) continue;
    const std::size_t close = MatchGroup(toks_, open, piece.end);
    auto inner = SplitTopLevel(toks_, {open + 1, close - 1});
    if (inner.empty()) continue;
    AddOperands(ValueOperands(inner[0], type));
  }
}

void InstructionParser::ParseCall(std::size_t i) {
  const std::size_t n = toks_.size();
  std::size_t callee = n;
  int depth = 0;
  for (std::size_t k = i; k + 1 < n; ++k) {
    if (IsOpen(toks_[k])) ++depth;
    if (IsClose(toks_[k])) --depth;
    if (depth == 0 &&
        (toks_[k].kind == TokKind::kGlobal ||
         (toks_[k].kind == TokKind::kLocal && !IsNamedType(toks_[k]))) &&
        toks_[k + 1].IsPunct('(')) {
      callee = k;
      break;
    }
  }
  if (callee == n) {
    inst_.structurally_parsed = false;
    ScanIdentifiers(i);
    return;
  }
  const std::size_t ret = SkipWords(i, callee);
  const std::size_t ret_len = TypeLength(ret, callee);
  if (ret_len > 0) {
    inst_.result_type = Slice(ret, ret + ret_len);
    // A function type like `i32 (i8*, ...)` is not part of the result type.
    if (ret + ret_len < callee && toks_[ret + ret_len].IsPunct('(')) {
      inst_.result_type = Slice(ret, ret + 1);
    }
  }
  inst_.callee = toks_[callee].text;
  AddOperands({IrOperand{toks_[callee].kind == TokKind::kGlobal
                             ? OperandKind::kGlobal
                             : OperandKind::kLocal,
                         toks_[callee].text, "", 0}});
  const std::size_t close = MatchGroup(toks_, callee + 1, n);
  for (Range arg : SplitTopLevel(toks_, {callee + 2, close - 1})) {
    // Debug-info arguments (`metadata ...`) carry no program values.
    if (arg.empty() || toks_[arg.begin].IsWord("metadata")) continue;
    AddOperands(ValueOperands(arg, ""));
  }
  if (inst_.opcode == "invoke" || inst_.opcode == "callbr") {
    CollectSuccessors(close);
  }
}

void InstructionParser::ParseValuePieces(std::size_t i) {
  for (Range piece : SplitTopLevel(toks_, {i, toks_.size()})) {
    if (IsAttributePiece(piece) || toks_[piece.begin].IsWord("label")) continue;
    AddOperands(ValueOperands(piece, ""));
  }
}

FunctionHeader InstructionParser::ParseHeader() const {
  FunctionHeader out;
  const std::size_t n = toks_.size();
  std::size_t k = 0;
  while (k + 1 < n &&
         !(toks_[k].kind == TokKind::kGlobal && toks_[k + 1].IsPunct('('))) {
    ++k;
  }
  if (k + 1 >= n) return out;
  out.name = toks_[k].text;
  const std::size_t close = MatchGroup(toks_, k + 1, n);
  std::size_t unnamed = 0;
  for (Range piece : SplitTopLevel(toks_, {k + 2, close - 1})) {
    if (piece.empty() || toks_[piece.begin].IsWord("...")) continue;
    const std::size_t type_len = TypeLength(piece.begin, piece.end);
    std::string id;
    const Tok& last = toks_[piece.end - 1];
    if (last.kind == TokKind::kLocal && !IsNamedType(last) &&
        piece.end - 1 >= piece.begin + std::max<std::size_t>(type_len, 1)) {
      id = last.text;
    } else {
      id = "%" + std::to_string(unnamed);
    }
    if (std::all_of(id.begin() + 1, id.end(), [](char c) {
          return std::isdigit(static_cast<unsigned char>(c));
        })) {
      ++unnamed;
    }
    out.arguments.push_back(
        IrArgument{id, type_len ? Slice(piece.begin, piece.begin + type_len)
                                : toks_[piece.begin].text});
  }
  return out;
}

IrInstruction InstructionParser::Parse() {
  inst_.full_text = text_;
  std::size_t i = 0;
  const std::size_t n = toks_.size();
  if (n >= 2 && toks_[0].kind == TokKind::kLocal && toks_[1].IsPunct('=')) {
    inst_.result_id = toks_[0].text;
    i = 2;
  }
  while (i < n && (toks_[i].IsWord("tail") || toks_[i].IsWord("musttail") ||
                   toks_[i].IsWord("notail"))) {
    ++i;
  }
  if (i >= n) {
    inst_.opcode = "unknown";
    inst_.structurally_parsed = false;
    return inst_;
  }
  inst_.opcode = toks_[i].text;
  const std::string& op = inst_.opcode;
  inst_.is_terminator = IsTerminatorOpcode(op);
  ++i;

  if (BinaryOpcodes().contains(op)) {
    ParseBinary(i, false);
  } else if (op == "icmp" || op == "fcmp") {
    ParseBinary(i, true);
  } else if (op == "load") {
    ParseMemory(i, true);
  } else if (op == "alloca") {
    ParseMemory(i, true);
    inst_.result_type += "*";
  } else if (op == "store") {
    ParseMemory(i, false);
  } else if (op == "getelementptr") {
    ParseGep(i);
  } else if (CastOpcodes().contains(op)) {
    ParseCast(i);
  } else if (op == "select") {
    ParseSelect(i);
  } else if (op == "phi") {
    ParsePhi(i);
  } else if (op == "call" || op == "invoke" || op == "callbr") {
    ParseCall(i);
  } else if (op == "ret") {
    if (!(i < n && toks_[i].IsWord("void"))) ParseValuePieces(i);
  } else if (op == "br" || op == "indirectbr") {
    ParseValuePieces(i);
    CollectSuccessors(i);
  } else if (op == "switch") {
    auto pieces = SplitTopLevel(toks_, {i, n});
    if (!pieces.empty()) AddOperands(ValueOperands(pieces[0], ""));
    // Case values: `<type> <value>, label %dest` entries inside brackets.
    std::size_t open = i;
    while (open < n && !toks_[open].IsPunct('[')) ++open;
    if (open < n) {
      const std::size_t close = MatchGroup(toks_, open, n);
      std::size_t start = open + 1;
      for (std::size_t k = open + 1; k + 1 < close; ++k) {
        if (toks_[k].IsPunct(',')) {
          AddOperands(ValueOperands({start, k}, ""));
          k += 2;  // `label %dest`
          start = k + 1;
        }
      }
    }
    CollectSuccessors(i);
  } else if (op == "unreachable") {
    // no operands
  } else {
    inst_.structurally_parsed = false;
    ScanIdentifiers(i);
    if (inst_.is_terminator) CollectSuccessors(i);
  }
  if (inst_.result_id && inst_.result_type.empty()) inst_.result_type = op;
  return inst_;
}

// ---------------------------------------------------------------------------
// Module parsing

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Net count of `open` minus `close` outside string literals.
int NetDepth(std::string_view s, char open, char close) {
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == open) ++depth;
    if (c == close) --depth;
  }
  return depth;
}

std::optional<std::string> BlockLabel(std::string_view line) {
  static const std::regex kLabel(R"(^([-a-zA-Z$._0-9]+|"[^"]*"):$)");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(line.begin(), line.end(), m, kLabel)) {
    return std::nullopt;
  }
  std::string label = m[1].str();
  if (label.size() >= 2 && label.front() == '"') {
    label = label.substr(1, label.size() - 2);
  }
  return label;
}

bool IsMetadataLine(std::string_view line) {
  return StartsWith(line, "!") || StartsWith(line, "#dbg_");
}

[[noreturn]] void Malformed(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::kMalformedModule,
              (path.empty() ? std::string("<input>") : path) + ": " + why);
}

}  // namespace

std::vector<IrOperand> IrInstruction::OperandIds() const {
  std::vector<IrOperand> ids;
  for (const IrOperand& op : operands) {
    if (op.is_identifier()) ids.push_back(op);
  }
  return ids;
}

const IrBlock* IrFunction::FindBlock(std::string_view label) const {
  for (const IrBlock& b : blocks) {
    if (b.label == label) return &b;
  }
  return nullptr;
}

const IrFunction* IrModule::FindFunction(std::string_view name) const {
  for (const IrFunction& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::size_t IrModule::InstructionCount() const {
  std::size_t n = 0;
  for (const auto& f : functions) {
    for (const auto& b : f.blocks) n += b.instructions.size();
  }
  return n;
}

bool IsTerminatorOpcode(std::string_view opcode) {
  static const std::unordered_set<std::string_view> k = {
      "ret",    "br",          "switch",      "indirectbr", "invoke", "callbr",
      "resume", "unreachable", "catchswitch", "catchret",   "cleanupret"};
  return k.contains(opcode);
}

std::string StripComment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && line[i] == ';') return std::string(line.substr(0, i));
  }
  return std::string(line);
}

std::string StripMetadata(std::string_view instruction) {
  std::string_view s = Trim(instruction);
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '(' || c == '[' || c == '{' || c == '<') ++depth;
    if (c == ')' || c == ']' || c == '}' || c == '>') --depth;
    if (depth == 0 && c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '!') {
        s = Trim(s.substr(0, i));
        break;
      }
    }
  }
  static const std::regex kAttrGroup(R"(\s+#[0-9]+$)");
  std::string out(s);
  for (;;) {
    std::string next = std::regex_replace(out, kAttrGroup, "");
    if (next == out) break;
    out = std::move(next);
  }
  return std::string(Trim(out));
}

IrInstruction ParseInstruction(std::string_view line,
                               const std::set<std::string>& named_types) {
  InstructionParser parser(StripMetadata(StripComment(line)), named_types);
  return parser.Parse();
}

std::vector<std::string> TerminatorSuccessors(const IrInstruction& inst) {
  if (!inst.is_terminator) return {};
  return inst.successor_labels;
}

IrModule ParseModule(std::string_view text, std::string source_path) {
  IrModule module;
  module.source_path = std::move(source_path);
  const std::string& path = module.source_path;
  if (Trim(text).empty()) Malformed(path, "empty input");

  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      lines.emplace_back(Trim(StripComment(text.substr(start, end - start))));
      start = end + 1;
    }
  }
  int brace_depth = 0;
  for (const std::string& l : lines) {
    brace_depth += NetDepth(l, '{', '}');
    if (brace_depth < 0) Malformed(path, "unbalanced braces");
  }
  if (brace_depth != 0) Malformed(path, "unbalanced braces");

  // Named types first so operand parsing can tell them apart from values.
  static const std::regex kTypeDef(R"(^(%[-a-zA-Z$._0-9]+|%"[^"]*")\s*=\s*type\b.*)");
  for (const std::string& l : lines) {
    std::smatch m;
    if (std::regex_match(l, m, kTypeDef)) {
      module.named_types.insert(m[1].str());
      module.type_definitions.push_back(l);
    }
  }

  std::set<std::string> function_names;
  IrFunction* current = nullptr;
  std::size_t implicit_entry = 0;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (current) {
      if (line == "}") {
        if (current->blocks.empty()) {
          Malformed(path, "function " + current->name + " has no body");
        }
        current = nullptr;
        continue;
      }
      if (line.empty() || IsMetadataLine(line)) continue;
      if (auto label = BlockLabel(line)) {
        if (current->FindBlock(*label)) {
          Malformed(path, "duplicate block label " + *label + " in " +
                              current->name);
        }
        current->blocks.push_back(IrBlock{*label, {}});
        continue;
      }
      std::string logical = line;
      int bracket = NetDepth(logical, '[', ']');
      while (bracket > 0 && li + 1 < lines.size() && lines[li + 1] != "}") {
        ++li;
        logical += " " + lines[li];
        bracket += NetDepth(lines[li], '[', ']');
      }
      if (current->blocks.empty()) {
        current->blocks.push_back(IrBlock{std::to_string(implicit_entry), {}});
      }
      current->blocks.back().instructions.push_back(
          ParseInstruction(logical, module.named_types));
      continue;
    }
    if (StartsWith(line, "define ") || StartsWith(line, "define\t")) {
      std::string header = line;
      while (header.find('{') == std::string::npos && li + 1 < lines.size()) {
        header += " " + lines[++li];
      }
      if (header.back() != '{') {
        Malformed(path, "expected '{' at end of function header");
      }
      FunctionHeader parsed =
          InstructionParser(header, module.named_types).ParseHeader();
      if (parsed.name.empty()) Malformed(path, "function header without name");
      if (!function_names.insert(parsed.name).second) {
        Malformed(path, "duplicate function " + parsed.name);
      }
      implicit_entry = static_cast<std::size_t>(std::count_if(
          parsed.arguments.begin(), parsed.arguments.end(), [](const IrArgument& a) {
            return std::all_of(a.id.begin() + 1, a.id.end(), [](char c) {
              return std::isdigit(static_cast<unsigned char>(c));
            });
          }));
      module.functions.push_back(
          IrFunction{parsed.name, header, std::move(parsed.arguments), {}, false});
      current = &module.functions.back();
    } else if (StartsWith(line, "declare ")) {
      FunctionHeader parsed =
          InstructionParser(line, module.named_types).ParseHeader();
      if (parsed.name.empty()) continue;
      if (!function_names.insert(parsed.name).second) {
        Malformed(path, "duplicate function " + parsed.name);
      }
      module.functions.push_back(
          IrFunction{parsed.name, line, std::move(parsed.arguments), {}, true});
    } else if (StartsWith(line, "@")) {
      const std::vector<Tok> toks = Lex(line);
      if (toks.size() >= 2 && toks[0].kind == TokKind::kGlobal &&
          toks[1].IsPunct('=')) {
        module.globals.push_back(IrGlobal{toks[0].text, line});
      }
    }
  }
  if (current) Malformed(path, "unterminated function " + current->name);
  return module;
}

std::string RenderModule(const IrModule& module) {
  std::ostringstream out;
  for (const std::string& t : module.type_definitions) out << t << "\n";
  for (const IrGlobal& g : module.globals) out << g.text << "\n";
  for (const IrFunction& f : module.functions) {
    out << f.header << "\n";
    if (f.is_declaration) continue;
    for (const IrBlock& b : f.blocks) {
      out << b.label << ":\n";
      for (const IrInstruction& inst : b.instructions) {
        out << "  " << inst.full_text << "\n";
      }
    }
    out << "}\n";
  }
  return out.str();
}

}  // namespace gbm
