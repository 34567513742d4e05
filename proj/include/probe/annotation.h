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

// Human triage of candidates into four error categories.
//
// Labels live in an append-only JSONL log next to the run. Each record is
//   {"candidate_id", "category", "annotator", "note", "timestamp", "revision"}
// and the current label of a candidate is its highest revision. Opening a
// store replays and compacts the log and takes an exclusive lock on
// "<log>.lock"; a second writer gets StoreLocked.

#ifndef PROBE_ANNOTATION_H_
#define PROBE_ANNOTATION_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "probe/pipeline.h"

namespace probe {

enum class ErrorCategory { kWordChanging, kInability, kMissingParts, kIrrelevant };

inline constexpr std::array<ErrorCategory, 4> kAllCategories = {
    ErrorCategory::kWordChanging, ErrorCategory::kInability, ErrorCategory::kMissingParts,
    ErrorCategory::kIrrelevant};

// word_changing, inability, missing_parts, irrelevant
std::string_view CategoryWireName(ErrorCategory category);
std::optional<ErrorCategory> ParseCategory(std::string_view wire_name);
std::vector<std::string> AllowedCategoryNames();

// Word changing is not severe; the other three are.
constexpr bool IsSevere(ErrorCategory category) {
  return category != ErrorCategory::kWordChanging;
}

struct Annotation {
  std::string candidate_id;
  ErrorCategory category = ErrorCategory::kWordChanging;
  std::string annotator;
  std::optional<std::string> note;
  std::string timestamp;  // UTC, ISO 8601
  std::uint64_t revision = 0;
};

nlohmann::json ToJson(const Annotation& a);
// Throws kInvalidCategory for a category outside the taxonomy.
Annotation AnnotationFromJson(const nlohmann::json& j);

// Highest revision per candidate; for equal revisions the later record wins.
std::map<std::string, Annotation> CurrentAnnotations(const std::vector<Annotation>& log);

std::vector<Annotation> ReadAnnotationLog(const std::filesystem::path& path);

struct ErrorStats {
  std::size_t word_changing = 0;
  std::size_t inability = 0;
  std::size_t missing_parts = 0;
  std::size_t irrelevant = 0;
  std::size_t severe_total = 0;
  double severe_rate = 0.0;  // severe_total / enumeration count
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t candidates = 0;
  std::size_t enumerations = 0;
};

// Counts current labels only. Throws kForeignAnnotation when a label names a
// candidate that is not in `run`.
ErrorStats ComputeErrorStats(const std::map<std::string, Annotation>& current,
                             const RunResult& run);
nlohmann::json ToJson(const ErrorStats& stats);

class AnnotationStore {
 public:
  // Throws kStoreLocked, kForeignAnnotation, kInvalidCategory, kIoError.
  AnnotationStore(std::filesystem::path log_path, const RunResult& run);
  ~AnnotationStore();

  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  // Durable (fsync'd) before it returns. Throws kUnknownCandidate.
  Annotation RecordLabel(std::string_view candidate_id, ErrorCategory category,
                         std::string_view annotator,
                         std::optional<std::string> note = std::nullopt);

  std::optional<Annotation> Current(std::string_view candidate_id) const;
  std::map<std::string, Annotation> CurrentAll() const;
  ErrorStats Stats() const;

  // Current annotations as JSONL, ordered by candidate_id.
  std::string ExportJsonl() const;

  const std::filesystem::path& log_path() const { return log_path_; }

 private:
  void Compact();

  std::filesystem::path log_path_;
  const RunResult& run_;
  int lock_fd_ = -1;
  std::FILE* log_ = nullptr;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Annotation> current_;
};

}  // namespace probe

#endif  // PROBE_ANNOTATION_H_
