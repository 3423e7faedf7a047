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

#ifndef GBM_STATUS_H_
#define GBM_STATUS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbm {

enum class ErrorCode {
  kMalformedModule,
  kEmptyModule,
  kVersionMismatch,
  kCorruptPayload,
  kEmptyCorpus,
  kShapeMismatch,
  kNonFiniteInput,
  kNonFiniteGradient,
  kNonFiniteScore,
  kNonFiniteLoss,
  kTooFewTasks,
  kInsufficientNegatives,
  kLengthMismatch,
  kEmptyBatch,
  kChecksumMismatch,
  kInvalidArgument,
  kNoInputs,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// True for codes caused by numerical failure rather than bad input data.
bool IsNumericError(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gbm

#endif  // GBM_STATUS_H_
