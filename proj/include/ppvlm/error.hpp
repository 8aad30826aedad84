// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppvlm {

enum class ErrorCode {
  // core-types / ingestion
  kValidationFailed,
  kFileNotFound,
  kMalformedLine,
  kInvalidSpan,
  kNonPositiveFps,
  kAdapterUnreachable,
  kAdapterError,
  kCacheCorrupt,
  // prompting
  kPromptTooLong,
  kInvalidTemplate,
  // metrics
  kEmptyCorpus,
  kUnknownMetric,
  // backend
  kTimeout,
  kRemoteError,
  kInvalidRequest,
  // selection
  kPoolTooSmall,
  kPoolExhausted,
  kBackendFailure,
  // harness
  kZeroNativeScore,
  kZeroBaseline,
  kDegeneratePoints,
  kUnknownCategory,
  // config / cli
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Errors that are the caller's fault map to CLI exit 2, everything that
// depends on a remote service or the filesystem state maps to exit 3.
bool is_user_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace ppvlm
