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

#include "gbm/status.h"

namespace gbm {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedModule: return "MalformedModule";
    case ErrorCode::kEmptyModule: return "EmptyModule";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptPayload: return "CorruptPayload";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kNonFiniteScore: return "NonFiniteScore";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kTooFewTasks: return "TooFewTasks";
    case ErrorCode::kInsufficientNegatives: return "InsufficientNegatives";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNoInputs: return "NoInputs";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

bool IsNumericError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonFiniteInput:
    case ErrorCode::kNonFiniteGradient:
    case ErrorCode::kNonFiniteScore:
    case ErrorCode::kNonFiniteLoss:
      return true;
    default:
      return false;
  }
}

}  // namespace gbm
