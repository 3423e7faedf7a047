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

#include "gbm/ad/checkpoint.h"

#include <bit>
#include <cstring>
#include <sstream>

#include "gbm/io.h"
#include "gbm/status.h"

namespace gbm::ad {
namespace {

void AppendU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t ReadU64(std::string_view bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(
             static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

std::string Hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << v;
  return out.str();
}

}  // namespace

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string SerializeCheckpoint(const ParameterStore& params,
                                const nlohmann::json& config) {
  std::string blob;
  nlohmann::json entries = nlohmann::json::array();
  for (const Parameter& p : params) {
    entries.push_back({{"name", p.name}, {"shape", p.value.shape}});
    for (double v : p.value.data) AppendU64(blob, std::bit_cast<std::uint64_t>(v));
  }
  nlohmann::json manifest = {{"params", entries},
                             {"checksum", Hex(Fnv1a64(blob))},
                             {"config", config}};
  const std::string manifest_text = manifest.dump();
  std::string out(kCheckpointMagic);
  AppendU64(out, manifest_text.size());
  out += manifest_text;
  out += blob;
  return out;
}

LoadedCheckpoint DeserializeCheckpoint(std::string_view bytes) {
  const std::size_t header = kCheckpointMagic.size() + 8;
  if (bytes.size() < header) {
    throw Error(ErrorCode::kCorruptPayload, "checkpoint too short");
  }
  if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    if (bytes.substr(0, 7) == kCheckpointMagic.substr(0, 7)) {
      throw Error(ErrorCode::kVersionMismatch,
                  "unsupported checkpoint version " +
                      std::string(bytes.substr(0, 8)));
    }
    throw Error(ErrorCode::kCorruptPayload, "missing checkpoint magic");
  }
  const std::uint64_t manifest_size = ReadU64(bytes, kCheckpointMagic.size());
  if (manifest_size > bytes.size() - header) {
    throw Error(ErrorCode::kCorruptPayload, "truncated checkpoint manifest");
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(header, manifest_size));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload,
                std::string("checkpoint manifest: ") + e.what());
  }
  const std::string_view blob = bytes.substr(header + manifest_size);
  LoadedCheckpoint result;
  try {
    if (manifest.at("checksum").get<std::string>() != Hex(Fnv1a64(blob))) {
      throw Error(ErrorCode::kChecksumMismatch, "checkpoint payload checksum");
    }
    result.config = manifest.value("config", nlohmann::json::object());
    std::size_t offset = 0;
    for (const auto& entry : manifest.at("params")) {
      Tensor t(entry.at("shape").get<Shape>());
      if (offset + 8 * t.size() > blob.size()) {
        throw Error(ErrorCode::kCorruptPayload, "truncated checkpoint blob");
      }
      for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = std::bit_cast<double>(ReadU64(blob, offset));
        offset += 8;
      }
      result.tensors.emplace_back(entry.at("name").get<std::string>(),
                                  std::move(t));
    }
    if (offset != blob.size()) {
      throw Error(ErrorCode::kCorruptPayload, "trailing bytes in checkpoint");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptPayload,
                std::string("checkpoint manifest: ") + e.what());
  }
  return result;
}

void RestoreParameters(const LoadedCheckpoint& checkpoint,
                       ParameterStore& params) {
  if (checkpoint.tensors.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "checkpoint has " + std::to_string(checkpoint.tensors.size()) +
                    " tensors, model has " + std::to_string(params.size()));
  }
  for (const auto& [name, tensor] : checkpoint.tensors) {
    Parameter& p = params.Get(name);
    if (p.value.shape != tensor.shape) {
      throw Error(ErrorCode::kShapeMismatch,
                  name + ": checkpoint " + ShapeToString(tensor.shape) +
                      " vs model " + ShapeToString(p.value.shape));
    }
    p.value = tensor;
  }
}

void WriteCheckpoint(const std::filesystem::path& path,
                     const ParameterStore& params,
                     const nlohmann::json& config) {
  WriteFileBytes(path, SerializeCheckpoint(params, config));
}

LoadedCheckpoint ReadCheckpoint(const std::filesystem::path& path) {
  return DeserializeCheckpoint(ReadFileBytes(path));
}

}  // namespace gbm::ad
