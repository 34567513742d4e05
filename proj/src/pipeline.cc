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

#include "probe/pipeline.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "probe/error.h"
#include "probe/hashing.h"
#include "probe/parallel.h"
#include "probe/utf8.h"

namespace probe {

using nlohmann::json;

void ValidateCorpus(const std::vector<TestPair>& corpus) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus has no pairs");
  std::unordered_set<std::string> ids;
  for (const auto& pair : corpus) {
    if (pair.source.empty() || pair.reference.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "pair " + pair.pair_id + " has an empty side");
    }
    if (!utf8::IsValid(pair.source) || !utf8::IsValid(pair.reference)) {
      throw Error(ErrorCode::kInvalidUtf8, "pair " + pair.pair_id + " is not valid UTF-8");
    }
    if (!ids.insert(pair.pair_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate pair id " + pair.pair_id);
    }
  }
}

namespace {

std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  for (;;) {
    const auto tab = line.find('\t', begin);
    out.push_back(line.substr(begin, tab - begin));
    if (tab == std::string::npos) return out;
    begin = tab + 1;
  }
}

std::vector<std::string> ReadLines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string UtcNow() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::vector<TestPair> LoadCorpusTsv(const std::filesystem::path& path) {
  std::vector<TestPair> corpus;
  const auto lines = ReadLines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = SplitTabs(lines[i]);
    const std::string lineno = std::to_string(i + 1);
    if (cols.size() == 2) {
      corpus.push_back({lineno, cols[0], cols[1]});
    } else if (cols.size() == 3) {
      corpus.push_back({cols[0], cols[1], cols[2]});
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + lineno + ": expected 2 or 3 tab-separated columns");
    }
  }
  ValidateCorpus(corpus);
  return corpus;
}

std::vector<TestPair> LoadCorpusAligned(const std::filesystem::path& sources,
                                        const std::filesystem::path& references) {
  auto src = ReadLines(sources);
  auto ref = ReadLines(references);
  if (src.size() != ref.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "source and reference files differ in line count (" +
                    std::to_string(src.size()) + " vs " + std::to_string(ref.size()) + ")");
  }
  std::vector<TestPair> corpus;
  corpus.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    corpus.push_back({std::to_string(i + 1), std::move(src[i]), std::move(ref[i])});
  }
  ValidateCorpus(corpus);
  return corpus;
}

void RunConfig::Validate() const {
  if (!(candidate_threshold >= 0.0 && candidate_threshold < valid_threshold &&
        valid_threshold <= 1.0)) {
    throw Error(ErrorCode::kConfigError,
                "thresholds must satisfy 0 <= candidate < valid <= 1 (got candidate=" +
                    std::to_string(candidate_threshold) +
                    ", valid=" + std::to_string(valid_threshold) + ")");
  }
  if (max_order < 1 || max_order > kMaxBleuOrder) {
    throw Error(ErrorCode::kConfigError, "metric max_order must be in 1..4");
  }
  backend.Validate();
}

json RunConfig::ToJson() const {
  json j;
  j["unit"] = std::string(UnitKindName(unit));
  j["valid_threshold"] = valid_threshold;
  j["candidate_threshold"] = candidate_threshold;
  j["metric_tokenization"] =
      metric_tokenization ? std::string(MetricTokenizationName(*metric_tokenization)) : "auto";
  j["max_order"] = max_order;
  j["backend"] = json::parse(backend.Canonical());
  j["lexicon_path"] = lexicon_path ? json(lexicon_path->string()) : json(nullptr);
  j["segmenter_command"] = segmenter_command;
  j["seed"] = seed;
  j["skip_separator_deletion"] = skip_separator_deletion;
  j["model_label"] = model_label;
  return j;
}

RunConfig RunConfig::FromJson(const json& j) {
  RunConfig c;
  try {
    c.unit = ParseUnitKind(j.at("unit").get<std::string>());
    c.valid_threshold = j.at("valid_threshold").get<double>();
    c.candidate_threshold = j.at("candidate_threshold").get<double>();
    const std::string tok = j.value("metric_tokenization", std::string("auto"));
    if (tok != "auto") c.metric_tokenization = ParseMetricTokenization(tok);
    c.max_order = j.value("max_order", kMaxBleuOrder);
    const json& b = j.at("backend");
    c.backend.kind = ParseBackendKind(b.at("kind").get<std::string>());
    for (const auto& [k, v] : b.at("parameters").items()) {
      c.backend.parameters[k] = v.get<std::string>();
    }
    if (j.contains("lexicon_path") && !j["lexicon_path"].is_null()) {
      c.lexicon_path = j["lexicon_path"].get<std::string>();
    }
    c.segmenter_command = j.value("segmenter_command", std::string());
    c.seed = j.value("seed", std::uint64_t{0});
    c.skip_separator_deletion = j.value("skip_separator_deletion", false);
    c.model_label = j.value("model_label", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("bad run config: ") + e.what());
  }
  return c;
}

MetricTokenization RunConfig::TokenizationFor(std::string_view reference) const {
  return metric_tokenization ? *metric_tokenization : DefaultTokenizationFor(reference);
}

BleuScore RunConfig::Score(std::string_view translation, std::string_view reference) const {
  return SentenceBleu(translation, reference, TokenizationFor(reference), max_order);
}

std::string CandidateId(std::string_view pair_id, UnitKind unit, std::size_t position) {
  std::string key(pair_id);
  key.push_back('\0');
  key += UnitKindName(unit);
  key.push_back('\0');
  key += std::to_string(position);
  return Sha256Hex(key).substr(0, 16);
}

std::vector<std::string> StageContext::Translate(std::span<const std::string> sources,
                                                 const RunConfig& config) const {
  const BatchOptions options{config.batch_size, config.parallelism};
  if (cache != nullptr) return TranslateCached(backend, *cache, sources, options, stats);
  return TranslateBatch(backend, sources, options);
}

ValidStage FindValid(const std::vector<TestPair>& corpus, const StageContext& context,
                     const RunConfig& config) {
  ValidateCorpus(corpus);
  std::vector<std::string> sources;
  sources.reserve(corpus.size());
  for (const auto& pair : corpus) sources.push_back(pair.source);
  const auto translations = context.Translate(sources, config);

  std::vector<BleuScore> scores(corpus.size());
  ParallelFor(corpus.size(), config.parallelism, [&](std::size_t i) {
    scores[i] = config.Score(translations[i], corpus[i].reference);
  });

  ValidStage stage;
  stage.corpus_size = corpus.size();
  stage.corpus_mean_bleu = MeanBleu(scores);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (scores[i].value >= config.valid_threshold) {
      stage.valid.push_back({corpus[i], translations[i], scores[i]});
    }
  }
  return stage;
}

std::vector<std::vector<Deletion>> GenerateEnumerations(
    const std::vector<ValidSentence>& valid, const StageContext& context,
    const RunConfig& config) {
  if (valid.empty()) throw Error(ErrorCode::kEmptyInput, "no valid sentences to perturb");
  EnumerateOptions options;
  options.skip_separators = config.skip_separator_deletion;

  std::vector<std::vector<Deletion>> groups(valid.size());
  if (config.unit == UnitKind::kWord && context.segmenter != nullptr) {
    std::vector<std::string> sources;
    for (const auto& v : valid) sources.push_back(v.pair.source);
    const auto all_spans = context.segmenter->SegmentAll(sources);
    for (std::size_t i = 0; i < valid.size(); ++i) {
      groups[i] = EnumerateDeletions(valid[i].pair.pair_id, valid[i].pair.source, config.unit,
                                     all_spans[i], options);
    }
    return groups;
  }
  ParallelFor(valid.size(), config.parallelism, [&](std::size_t i) {
    try {
      groups[i] = EnumerateDeletions(valid[i].pair.pair_id, valid[i].pair.source, config.unit,
                                     context.lexicon, options);
    } catch (const Error& e) {
      throw e.WithContext("pair_id " + valid[i].pair.pair_id);
    }
  });
  return groups;
}

CandidateStage FindCandidates(const std::vector<ValidSentence>& valid,
                              const std::vector<std::vector<Deletion>>& groups,
                              const StageContext& context, const RunConfig& config) {
  if (groups.size() != valid.size()) {
    throw Error(ErrorCode::kInvalidArgument, "one deletion group per valid sentence required");
  }
  CandidateStage stage;
  std::vector<std::size_t> parent;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (const auto& d : groups[i]) {
      if (d.pair_id != valid[i].pair.pair_id) {
        throw Error(ErrorCode::kInvalidArgument,
                    "deletion of " + d.pair_id + " grouped under " + valid[i].pair.pair_id);
      }
      if (valid[i].bleu.value < config.valid_threshold) {
        throw Error(ErrorCode::kInvalidArgument, "parent " + d.pair_id + " is not valid");
      }
      Enumeration e;
      e.deletion = d;
      e.baseline_bleu = valid[i].bleu.value;
      stage.enumerations.push_back(std::move(e));
      parent.push_back(i);
    }
  }
  if (stage.enumerations.empty()) return stage;

  std::vector<std::string> distinct;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& e : stage.enumerations) {
    if (slot.emplace(e.deletion.perturbed_text, distinct.size()).second) {
      distinct.push_back(e.deletion.perturbed_text);
    }
  }
  const auto translations = context.Translate(distinct, config);

  ParallelFor(stage.enumerations.size(), config.parallelism, [&](std::size_t k) {
    auto& e = stage.enumerations[k];
    e.translation = translations[slot.at(e.deletion.perturbed_text)];
    e.bleu = config.Score(e.translation, valid[parent[k]].pair.reference);
  });

  for (const auto& e : stage.enumerations) {
    if (e.bleu.value <= config.candidate_threshold) {
      Candidate c;
      c.enumeration = e;
      c.delta = e.delta();
      c.candidate_id = CandidateId(e.deletion.pair_id, e.deletion.unit, e.deletion.position);
      stage.candidates.push_back(std::move(c));
    }
  }
  return stage;
}

RunHeader MakeHeader(const RunConfig& config, const Translator& backend,
                     const ValidStage& valid, const CandidateStage& candidates) {
  RunHeader h;
  h.config = config;
  h.backend_fingerprint = backend.Fingerprint();
  h.metric_policy = SmoothingPolicyDescription(config.max_order);
  h.corpus_size = valid.corpus_size;
  h.corpus_mean_bleu = valid.corpus_mean_bleu;
  h.valid_count = valid.valid.size();
  h.enumeration_count = candidates.enumerations.size();
  std::unordered_set<std::string> distinct;
  for (const auto& e : candidates.enumerations) distinct.insert(e.deletion.perturbed_text);
  h.distinct_perturbations = distinct.size();
  h.candidate_count = candidates.candidates.size();
  h.created_at = UtcNow();
  return h;
}

const Candidate* RunResult::FindCandidate(std::string_view candidate_id) const {
  for (const auto& c : candidates) {
    if (c.candidate_id == candidate_id) return &c;
  }
  return nullptr;
}

RunResult Run(const std::vector<TestPair>& corpus, const RunConfig& config,
              const StageContext& context) {
  config.Validate();
  ValidStage valid;
  try {
    valid = FindValid(corpus, context, config);
  } catch (const Error& e) {
    throw e.WithContext("find_valid");
  }
  std::vector<std::vector<Deletion>> groups;
  CandidateStage extracted;
  if (!valid.valid.empty()) {
    try {
      groups = GenerateEnumerations(valid.valid, context, config);
    } catch (const Error& e) {
      throw e.WithContext("generate_enumerations");
    }
    try {
      extracted = FindCandidates(valid.valid, groups, context, config);
    } catch (const Error& e) {
      throw e.WithContext("find_candidates");
    }
  }
  RunResult result;
  result.header = MakeHeader(config, context.backend, valid, extracted);
  result.valid = std::move(valid.valid);
  result.enumerations = std::move(extracted.enumerations);
  result.candidates = std::move(extracted.candidates);
  return result;
}

}  // namespace probe
