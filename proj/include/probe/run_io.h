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

// On-disk layout of a run directory:
//
//   config.json         RunHeader: echoed config, fingerprint, metric policy,
//                       counts; "provenance" holds the timestamp and execution
//                       settings and is the only field that varies between
//                       otherwise identical runs
//   valid.jsonl         one ValidSentence per line
//   deletions.jsonl     untranslated deletions (standalone enumerate stage)
//   enumerations.jsonl  one Enumeration per line, (corpus order, position)
//   candidates.jsonl    the enumerations at or below the candidate threshold

#ifndef PROBE_RUN_IO_H_
#define PROBE_RUN_IO_H_

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "probe/pipeline.h"

namespace probe {

nlohmann::json ToJson(const BleuScore& score);
BleuScore BleuFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const ValidSentence& v);
ValidSentence ValidFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const Deletion& d);
Deletion DeletionFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const Enumeration& e, double candidate_threshold);
Enumeration EnumerationFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const Candidate& c);
Candidate CandidateFromJson(const nlohmann::json& j);

// `execution` lands under provenance (parallelism, batch size, ...).
nlohmann::json ToJson(const RunHeader& header, const nlohmann::json& execution = {});
RunHeader HeaderFromJson(const nlohmann::json& j);

void WriteJsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& records);
std::vector<nlohmann::json> ReadJsonl(const std::filesystem::path& path);
void WriteJsonFile(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

void WriteValid(const std::filesystem::path& path, const std::vector<ValidSentence>& valid);
std::vector<ValidSentence> ReadValid(const std::filesystem::path& path);

void WriteDeletions(const std::filesystem::path& path,
                    const std::vector<std::vector<Deletion>>& groups);
// Regroups by pair_id following the order of `valid`.
std::vector<std::vector<Deletion>> ReadDeletions(const std::filesystem::path& path,
                                                 const std::vector<ValidSentence>& valid);

void WriteRunResult(const std::filesystem::path& dir, const RunResult& result,
                    const nlohmann::json& execution = {});
// Throws kIoError when a file is missing, kInvalidArgument on malformed records.
RunResult ReadRunResult(const std::filesystem::path& dir);

}  // namespace probe

#endif  // PROBE_RUN_IO_H_
