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

#ifndef GBM_AD_CHECKPOINT_H_
#define GBM_AD_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gbm/ad/tape.h"
#include "json.hpp"

namespace gbm::ad {

inline constexpr std::string_view kCheckpointMagic = "GBMCKPT1";

// On-disk layout:
//   "GBMCKPT1" | u64 LE manifest length | manifest JSON | float64 LE blob
// The manifest lists {name, shape} per parameter in blob order, an FNV-1a
// checksum of the blob and a free-form "config" object.
std::string SerializeCheckpoint(const ParameterStore& params,
                                const nlohmann::json& config);

struct LoadedCheckpoint {
  nlohmann::json config;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

LoadedCheckpoint DeserializeCheckpoint(std::string_view bytes);

// Copies tensors into an existing store; names and shapes must match.
void RestoreParameters(const LoadedCheckpoint& checkpoint,
                       ParameterStore& params);

void WriteCheckpoint(const std::filesystem::path& path,
                     const ParameterStore& params,
                     const nlohmann::json& config);
LoadedCheckpoint ReadCheckpoint(const std::filesystem::path& path);

std::uint64_t Fnv1a64(std::string_view bytes);

}  // namespace gbm::ad

#endif  // GBM_AD_CHECKPOINT_H_
