// Copyright 2026 The Probe Authors.
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

#ifndef PROBE_ERROR_H_
#define PROBE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace probe {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidUtf8,
  kUnsegmentableInput,
  kIndexOutOfRange,
  kEmptyReference,
  kEmptyInput,
  kBackendUnavailable,
  kProtocolViolation,
  kMissingTranslation,
  kCacheCorrupt,
  kEmptyCorpus,
  kSentenceTooShort,
  kForeignAnnotation,
  kUnknownCandidate,
  kInvalidCategory,
  kStoreLocked,
  kAddressInUse,
  kConfigError,
  kIoError,
};

// Stable name used in diagnostics, e.g. "UnsegmentableInput".
std::string_view ErrorCodeName(ErrorCode code);

// All domain failures surface as this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  // Message without the code name.
  const std::string& detail() const { return detail_; }

  // Same error with `context` prepended to the detail.
  Error WithContext(const std::string& context) const {
    return Error(code_, context + ": " + detail_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace probe

#endif  // PROBE_ERROR_H_
