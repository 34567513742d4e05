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

#include "probe/annotation.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <unordered_set>

#include "probe/error.h"

namespace probe {

using nlohmann::json;

namespace {

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

void SyncOrThrow(std::FILE* f, const std::filesystem::path& path) {
  if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) {
    throw Error(ErrorCode::kIoError, "cannot flush " + path.string());
  }
}

}  // namespace

std::string_view CategoryWireName(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kWordChanging: return "word_changing";
    case ErrorCategory::kInability: return "inability";
    case ErrorCategory::kMissingParts: return "missing_parts";
    case ErrorCategory::kIrrelevant: return "irrelevant";
  }
  return "unknown";
}

std::optional<ErrorCategory> ParseCategory(std::string_view wire_name) {
  for (ErrorCategory c : kAllCategories) {
    if (CategoryWireName(c) == wire_name) return c;
  }
  return std::nullopt;
}

std::vector<std::string> AllowedCategoryNames() {
  std::vector<std::string> out;
  for (ErrorCategory c : kAllCategories) out.emplace_back(CategoryWireName(c));
  return out;
}

json ToJson(const Annotation& a) {
  return {{"candidate_id", a.candidate_id},
          {"category", std::string(CategoryWireName(a.category))},
          {"annotator", a.annotator},
          {"note", a.note ? json(*a.note) : json(nullptr)},
          {"timestamp", a.timestamp},
          {"revision", a.revision}};
}

Annotation AnnotationFromJson(const json& j) {
  Annotation a;
  try {
    a.candidate_id = j.at("candidate_id").get<std::string>();
    const std::string name = j.at("category").get<std::string>();
    const auto category = ParseCategory(name);
    if (!category) {
      throw Error(ErrorCode::kInvalidCategory, "category '" + name + "' is not one of " +
                                                   "word_changing, inability, missing_parts, irrelevant");
    }
    a.category = *category;
    a.annotator = j.at("annotator").get<std::string>();
    if (j.contains("note") && !j["note"].is_null()) a.note = j["note"].get<std::string>();
    a.timestamp = j.value("timestamp", std::string());
    a.revision = j.at("revision").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed annotation: ") + e.what());
  }
  return a;
}

std::map<std::string, Annotation> CurrentAnnotations(const std::vector<Annotation>& log) {
  std::map<std::string, Annotation> current;
  for (const auto& a : log) {
    auto it = current.find(a.candidate_id);
    if (it == current.end()) {
      current.emplace(a.candidate_id, a);
    } else if (a.revision >= it->second.revision) {
      it->second = a;
    }
  }
  return current;
}

std::vector<Annotation> ReadAnnotationLog(const std::filesystem::path& path) {
  std::vector<Annotation> log;
  std::ifstream in(path, std::ios::binary);
  if (!in) return log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      // Only the final line can be a torn append; anything earlier is damage.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": unparsable record");
    }
    log.push_back(AnnotationFromJson(j));
  }
  return log;
}

ErrorStats ComputeErrorStats(const std::map<std::string, Annotation>& current,
                             const RunResult& run) {
  std::unordered_set<std::string> ids;
  for (const auto& c : run.candidates) ids.insert(c.candidate_id);
  ErrorStats s;
  s.candidates = run.candidates.size();
  s.enumerations = run.enumerations.size();
  for (const auto& [id, a] : current) {
    if (ids.count(id) == 0) {
      throw Error(ErrorCode::kForeignAnnotation, "annotation for unknown candidate " + id);
    }
    switch (a.category) {
      case ErrorCategory::kWordChanging: ++s.word_changing; break;
      case ErrorCategory::kInability: ++s.inability; break;
      case ErrorCategory::kMissingParts: ++s.missing_parts; break;
      case ErrorCategory::kIrrelevant: ++s.irrelevant; break;
    }
    ++s.labeled;
  }
  s.severe_total = s.inability + s.missing_parts + s.irrelevant;
  s.unlabeled = s.candidates - s.labeled;
  s.severe_rate = s.enumerations == 0
                      ? 0.0
                      : static_cast<double>(s.severe_total) / static_cast<double>(s.enumerations);
  return s;
}

json ToJson(const ErrorStats& s) {
  return {{"word_changing", s.word_changing},
          {"inability", s.inability},
          {"missing_parts", s.missing_parts},
          {"irrelevant", s.irrelevant},
          {"severe_total", s.severe_total},
          {"severe_rate", s.severe_rate},
          {"labeled", s.labeled},
          {"unlabeled", s.unlabeled},
          {"candidates", s.candidates},
          {"enumerations", s.enumerations}};
}

AnnotationStore::AnnotationStore(std::filesystem::path log_path, const RunResult& run)
    : log_path_(std::move(log_path)), run_(run) {
  if (log_path_.has_parent_path()) {
    std::filesystem::create_directories(log_path_.parent_path());
  }
  const std::string lock_path = log_path_.string() + ".lock";
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (lock_fd_ < 0) {
    throw Error(ErrorCode::kIoError, "cannot open " + lock_path + ": " + std::strerror(errno));
  }
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw Error(ErrorCode::kStoreLocked, log_path_.string() + " is held by another writer");
  }
  try {
    current_ = CurrentAnnotations(ReadAnnotationLog(log_path_));
    ComputeErrorStats(current_, run_);
    Compact();
    log_ = std::fopen(log_path_.c_str(), "ab");
    if (log_ == nullptr) throw Error(ErrorCode::kIoError, "cannot append to " + log_path_.string());
  } catch (...) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw;
  }
}

AnnotationStore::~AnnotationStore() {
  if (log_ != nullptr) std::fclose(log_);
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void AnnotationStore::Compact() {
  const std::filesystem::path tmp = log_path_.string() + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (f == nullptr) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    const std::string body = ExportJsonl();
    const bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size();
    SyncOrThrow(f, tmp);
    std::fclose(f);
    if (!ok) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, log_path_);
}

Annotation AnnotationStore::RecordLabel(std::string_view candidate_id, ErrorCategory category,
                                        std::string_view annotator,
                                        std::optional<std::string> note) {
  if (run_.FindCandidate(candidate_id) == nullptr) {
    throw Error(ErrorCode::kUnknownCandidate, "no candidate " + std::string(candidate_id));
  }
  std::unique_lock lock(mutex_);
  Annotation a;
  a.candidate_id = std::string(candidate_id);
  a.category = category;
  a.annotator = std::string(annotator);
  a.note = std::move(note);
  a.timestamp = UtcTimestamp();
  auto it = current_.find(a.candidate_id);
  a.revision = it == current_.end() ? 1 : it->second.revision + 1;
  const std::string line = ToJson(a).dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_) != line.size()) {
    throw Error(ErrorCode::kIoError, "cannot append to " + log_path_.string());
  }
  SyncOrThrow(log_, log_path_);
  current_[a.candidate_id] = a;
  return a;
}

std::optional<Annotation> AnnotationStore::Current(std::string_view candidate_id) const {
  std::shared_lock lock(mutex_);
  auto it = current_.find(std::string(candidate_id));
  if (it == current_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, Annotation> AnnotationStore::CurrentAll() const {
  std::shared_lock lock(mutex_);
  return current_;
}

ErrorStats AnnotationStore::Stats() const {
  std::shared_lock lock(mutex_);
  return ComputeErrorStats(current_, run_);
}

std::string AnnotationStore::ExportJsonl() const {
  std::string out;
  for (const auto& [id, a] : current_) out += ToJson(a).dump() + "\n";
  return out;
}

}  // namespace probe
