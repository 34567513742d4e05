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

#include "probe/error.h"

namespace probe {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidUtf8: return "InvalidUtf8";
    case ErrorCode::kUnsegmentableInput: return "UnsegmentableInput";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kMissingTranslation: return "MissingTranslation";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kSentenceTooShort: return "SentenceTooShort";
    case ErrorCode::kForeignAnnotation: return "ForeignAnnotation";
    case ErrorCode::kUnknownCandidate: return "UnknownCandidate";
    case ErrorCode::kInvalidCategory: return "InvalidCategory";
    case ErrorCode::kStoreLocked: return "StoreLocked";
    case ErrorCode::kAddressInUse: return "AddressInUse";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace probe
