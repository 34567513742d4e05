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

#include "probe/run_io.h"

#include <fstream>
#include <unordered_map>

#include "probe/error.h"

namespace probe {

using nlohmann::json;

namespace {

template <typename Fn>
auto Parse(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed ") + what + ": " + e.what());
  }
}

std::string_view StatusName(TriageStatus s) {
  return s == TriageStatus::kLabeled ? "labeled" : "unlabeled";
}

}  // namespace

json ToJson(const BleuScore& s) {
  return {{"value", s.value},
          {"precisions", s.precisions},
          {"brevity_penalty", s.brevity_penalty},
          {"candidate_len", s.candidate_len},
          {"reference_len", s.reference_len},
          {"max_order", s.max_order}};
}

BleuScore BleuFromJson(const json& j) {
  return Parse("BLEU score", [&] {
    BleuScore s;
    s.value = j.at("value").get<double>();
    s.precisions = j.at("precisions").get<std::array<double, kMaxBleuOrder>>();
    s.brevity_penalty = j.at("brevity_penalty").get<double>();
    s.candidate_len = j.at("candidate_len").get<std::size_t>();
    s.reference_len = j.at("reference_len").get<std::size_t>();
    s.max_order = j.value("max_order", kMaxBleuOrder);
    return s;
  });
}

json ToJson(const ValidSentence& v) {
  return {{"pair_id", v.pair.pair_id},
          {"source", v.pair.source},
          {"reference", v.pair.reference},
          {"translation", v.translation},
          {"bleu", ToJson(v.bleu)}};
}

ValidSentence ValidFromJson(const json& j) {
  return Parse("valid record", [&] {
    ValidSentence v;
    v.pair.pair_id = j.at("pair_id").get<std::string>();
    v.pair.source = j.at("source").get<std::string>();
    v.pair.reference = j.at("reference").get<std::string>();
    v.translation = j.at("translation").get<std::string>();
    v.bleu = BleuFromJson(j.at("bleu"));
    return v;
  });
}

json ToJson(const Deletion& d) {
  return {{"pair_id", d.pair_id},
          {"unit", std::string(UnitKindName(d.unit))},
          {"position", d.position},
          {"deleted_surface", d.deleted_surface},
          {"start", d.start},
          {"end", d.end},
          {"perturbed_text", d.perturbed_text},
          {"duplicate_of", d.duplicate_of ? json(*d.duplicate_of) : json(nullptr)}};
}

Deletion DeletionFromJson(const json& j) {
  return Parse("deletion record", [&] {
    Deletion d;
    d.pair_id = j.at("pair_id").get<std::string>();
    d.unit = ParseUnitKind(j.at("unit").get<std::string>());
    d.position = j.at("position").get<std::size_t>();
    d.deleted_surface = j.at("deleted_surface").get<std::string>();
    d.start = j.at("start").get<std::size_t>();
    d.end = j.at("end").get<std::size_t>();
    d.perturbed_text = j.at("perturbed_text").get<std::string>();
    if (j.contains("duplicate_of") && !j["duplicate_of"].is_null()) {
      d.duplicate_of = j["duplicate_of"].get<std::size_t>();
    }
    return d;
  });
}

json ToJson(const Enumeration& e, double candidate_threshold) {
  json j = ToJson(e.deletion);
  j["translation"] = e.translation;
  j["bleu"] = ToJson(e.bleu);
  j["baseline_bleu"] = e.baseline_bleu;
  j["delta"] = e.delta();
  j["is_candidate"] = e.bleu.value <= candidate_threshold;
  return j;
}

Enumeration EnumerationFromJson(const json& j) {
  return Parse("enumeration record", [&] {
    Enumeration e;
    e.deletion = DeletionFromJson(j);
    e.translation = j.at("translation").get<std::string>();
    e.bleu = BleuFromJson(j.at("bleu"));
    e.baseline_bleu = j.at("baseline_bleu").get<double>();
    return e;
  });
}

json ToJson(const Candidate& c) {
  json j = ToJson(c.enumeration, c.enumeration.bleu.value);
  j.erase("is_candidate");
  j["candidate_id"] = c.candidate_id;
  j["delta"] = c.delta;
  j["triage_status"] = std::string(StatusName(c.triage_status));
  return j;
}

Candidate CandidateFromJson(const json& j) {
  return Parse("candidate record", [&] {
    Candidate c;
    c.enumeration = EnumerationFromJson(j);
    c.candidate_id = j.at("candidate_id").get<std::string>();
    c.delta = j.at("delta").get<double>();
    c.triage_status = j.value("triage_status", std::string("unlabeled")) == "labeled"
                          ? TriageStatus::kLabeled
                          : TriageStatus::kUnlabeled;
    return c;
  });
}

json ToJson(const RunHeader& h, const json& execution) {
  json j;
  j["config"] = h.config.ToJson();
  j["backend_fingerprint"] = h.backend_fingerprint;
  j["metric_policy"] = h.metric_policy;
  j["counts"] = {{"corpus", h.corpus_size},
                 {"valid", h.valid_count},
                 {"enumerations", h.enumeration_count},
                 {"distinct_perturbations", h.distinct_perturbations},
                 {"candidates", h.candidate_count}};
  j["corpus_mean_bleu"] = h.corpus_mean_bleu;
  j["provenance"] = {{"created_at", h.created_at},
                     {"execution", execution.is_null() ? json::object() : execution}};
  return j;
}

RunHeader HeaderFromJson(const json& j) {
  return Parse("run header", [&] {
    RunHeader h;
    h.config = RunConfig::FromJson(j.at("config"));
    h.backend_fingerprint = j.at("backend_fingerprint").get<std::string>();
    h.metric_policy = j.at("metric_policy").get<std::string>();
    const json& c = j.at("counts");
    h.corpus_size = c.at("corpus").get<std::size_t>();
    h.valid_count = c.at("valid").get<std::size_t>();
    h.enumeration_count = c.at("enumerations").get<std::size_t>();
    h.distinct_perturbations = c.at("distinct_perturbations").get<std::size_t>();
    h.candidate_count = c.at("candidates").get<std::size_t>();
    h.corpus_mean_bleu = j.at("corpus_mean_bleu").get<double>();
    if (j.contains("provenance")) {
      h.created_at = j["provenance"].value("created_at", std::string());
    }
    return h;
  });
}

void WriteJsonl(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<json> ReadJsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void WriteJsonFile(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
}

void WriteValid(const std::filesystem::path& path, const std::vector<ValidSentence>& valid) {
  std::vector<json> records;
  records.reserve(valid.size());
  for (const auto& v : valid) records.push_back(ToJson(v));
  WriteJsonl(path, records);
}

std::vector<ValidSentence> ReadValid(const std::filesystem::path& path) {
  std::vector<ValidSentence> out;
  for (const auto& j : ReadJsonl(path)) out.push_back(ValidFromJson(j));
  return out;
}

void WriteDeletions(const std::filesystem::path& path,
                    const std::vector<std::vector<Deletion>>& groups) {
  std::vector<json> records;
  for (const auto& g : groups) {
    for (const auto& d : g) records.push_back(ToJson(d));
  }
  WriteJsonl(path, records);
}

std::vector<std::vector<Deletion>> ReadDeletions(const std::filesystem::path& path,
                                                 const std::vector<ValidSentence>& valid) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < valid.size(); ++i) index.emplace(valid[i].pair.pair_id, i);
  std::vector<std::vector<Deletion>> groups(valid.size());
  for (const auto& j : ReadJsonl(path)) {
    Deletion d = DeletionFromJson(j);
    auto it = index.find(d.pair_id);
    if (it == index.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "deletion references pair " + d.pair_id + " which is not valid");
    }
    groups[it->second].push_back(std::move(d));
  }
  return groups;
}

void WriteRunResult(const std::filesystem::path& dir, const RunResult& result,
                    const json& execution) {
  std::filesystem::create_directories(dir);
  WriteJsonFile(dir / "config.json", ToJson(result.header, execution));
  WriteValid(dir / "valid.jsonl", result.valid);
  std::vector<json> records;
  records.reserve(result.enumerations.size());
  for (const auto& e : result.enumerations) {
    records.push_back(ToJson(e, result.header.config.candidate_threshold));
  }
  WriteJsonl(dir / "enumerations.jsonl", records);
  records.clear();
  for (const auto& c : result.candidates) records.push_back(ToJson(c));
  WriteJsonl(dir / "candidates.jsonl", records);
}

RunResult ReadRunResult(const std::filesystem::path& dir) {
  RunResult result;
  result.header = HeaderFromJson(ReadJsonFile(dir / "config.json"));
  result.valid = ReadValid(dir / "valid.jsonl");
  for (const auto& j : ReadJsonl(dir / "enumerations.jsonl")) {
    result.enumerations.push_back(EnumerationFromJson(j));
  }
  for (const auto& j : ReadJsonl(dir / "candidates.jsonl")) {
    result.candidates.push_back(CandidateFromJson(j));
  }
  return result;
}

}  // namespace probe
