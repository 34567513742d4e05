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

// JSON-over-HTTP triage API on top of an AnnotationStore.
//
//   GET  /api/run                    run header
//   GET  /api/candidates             ?status=labeled|unlabeled&category=&offset=&limit=
//   GET  /api/candidates/{id}
//   POST /api/candidates/{id}/label  {"category", "annotator", "note"?}
//   GET  /api/stats
//   GET  /api/export                 annotations.jsonl
//
// Candidates are listed worst BLEU first. A label is fsync'd before the
// response is written.

#ifndef PROBE_ANNOTATION_SERVICE_H_
#define PROBE_ANNOTATION_SERVICE_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "probe/annotation.h"
#include "probe/pipeline.h"

namespace httplib {
class Server;
}

namespace probe {

// Full provenance of one candidate plus its current label (or null).
nlohmann::json CandidateView(const Candidate& candidate, const ValidSentence* parent,
                             const std::optional<Annotation>& label);

// Ascending enumeration BLEU; ties keep run order.
std::vector<const Candidate*> WorstFirst(const RunResult& run);

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

class AnnotationService {
 public:
  // Binds immediately. Throws kAddressInUse.
  AnnotationService(AnnotationStore& store, const RunResult& run, ServiceOptions options);
  ~AnnotationService();

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  int port() const { return port_; }
  const std::string& host() const { return options_.host; }

  // Serves on a background thread; returns once accepting.
  void Start();
  // Serves on the calling thread until Stop().
  void Run();
  void Stop();

 private:
  void Routes();

  AnnotationStore& store_;
  const RunResult& run_;
  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace probe

#endif  // PROBE_ANNOTATION_SERVICE_H_
