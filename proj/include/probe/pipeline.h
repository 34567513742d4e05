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

// Candidate extraction: translate the test set, keep the valid sentences,
// delete every unit of every valid source once, re-translate, and flag the
// enumerations whose BLEU collapses.
//
// Both comparisons are inclusive: valid means BLEU >= valid_threshold and a
// candidate has BLEU <= candidate_threshold. Enumerations are scored against
// the parent pair's reference, never against the parent's translation.

#ifndef PROBE_PIPELINE_H_
#define PROBE_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "probe/metric.h"
#include "probe/text_units.h"
#include "probe/translation_cache.h"
#include "probe/translator.h"

namespace probe {

struct TestPair {
  std::string pair_id;
  std::string source;
  std::string reference;
};

// Throws kInvalidArgument on empty texts or duplicate ids, kEmptyCorpus when
// `corpus` is empty.
void ValidateCorpus(const std::vector<TestPair>& corpus);

// Single TSV: "source<TAB>reference" (ids are 1-based line numbers) or
// "id<TAB>source<TAB>reference". Blank lines are skipped.
std::vector<TestPair> LoadCorpusTsv(const std::filesystem::path& path);
// Two line-aligned files; ids are 1-based line numbers.
std::vector<TestPair> LoadCorpusAligned(const std::filesystem::path& sources,
                                        const std::filesystem::path& references);

struct RunConfig {
  UnitKind unit = UnitKind::kCharacter;
  double valid_threshold = 0.5;
  double candidate_threshold = 0.1;
  // Unset: character-level for references containing CJK, word-level otherwise.
  std::optional<MetricTokenization> metric_tokenization;
  int max_order = kMaxBleuOrder;
  BackendSpec backend;
  std::optional<std::filesystem::path> lexicon_path;
  std::string segmenter_command;  // external word segmenter, optional
  std::uint64_t seed = 0;
  bool skip_separator_deletion = false;
  std::size_t batch_size = 64;
  std::size_t parallelism = 1;
  std::string model_label;

  // 0 <= candidate_threshold < valid_threshold <= 1, order in 1..4.
  void Validate() const;

  // Everything that determines results; parallelism and batch size excluded.
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j);

  MetricTokenization TokenizationFor(std::string_view reference) const;
  BleuScore Score(std::string_view translation, std::string_view reference) const;
};

struct ValidSentence {
  TestPair pair;
  std::string translation;
  BleuScore bleu;
};

struct Enumeration {
  Deletion deletion;
  std::string translation;
  BleuScore bleu;
  double baseline_bleu = 0.0;

  double delta() const { return baseline_bleu - bleu.value; }
};

enum class TriageStatus { kUnlabeled, kLabeled };

struct Candidate {
  Enumeration enumeration;
  double delta = 0.0;
  std::string candidate_id;
  TriageStatus triage_status = TriageStatus::kUnlabeled;
};

// Hash of (pair_id, unit, position); 16 hex digits.
std::string CandidateId(std::string_view pair_id, UnitKind unit, std::size_t position);

// Translation plumbing shared by the stages. `cache` may be null.
struct StageContext {
  Translator& backend;
  TranslationCache* cache = nullptr;
  const Lexicon* lexicon = nullptr;
  const SubprocessSegmenter* segmenter = nullptr;
  CacheStats* stats = nullptr;

  std::vector<std::string> Translate(std::span<const std::string> sources,
                                     const RunConfig& config) const;
};

struct ValidStage {
  std::vector<ValidSentence> valid;
  std::size_t corpus_size = 0;
  double corpus_mean_bleu = 0.0;  // mean sentence BLEU over the whole corpus
};

ValidStage FindValid(const std::vector<TestPair>& corpus, const StageContext& context,
                     const RunConfig& config);

// One group of untranslated deletions per valid sentence, in valid order.
std::vector<std::vector<Deletion>> GenerateEnumerations(
    const std::vector<ValidSentence>& valid, const StageContext& context,
    const RunConfig& config);

struct CandidateStage {
  std::vector<Enumeration> enumerations;  // (corpus order, position)
  std::vector<Candidate> candidates;      // subsequence of the above
};

// `groups[i]` holds the deletions of `valid[i]`.
CandidateStage FindCandidates(const std::vector<ValidSentence>& valid,
                              const std::vector<std::vector<Deletion>>& groups,
                              const StageContext& context, const RunConfig& config);

struct RunHeader {
  RunConfig config;
  std::string backend_fingerprint;
  std::string metric_policy;
  std::size_t corpus_size = 0;
  double corpus_mean_bleu = 0.0;
  std::size_t valid_count = 0;
  std::size_t enumeration_count = 0;
  std::size_t distinct_perturbations = 0;
  std::size_t candidate_count = 0;
  // Excluded from reproducibility comparisons.
  std::string created_at;
};

struct RunResult {
  RunHeader header;
  std::vector<ValidSentence> valid;
  std::vector<Enumeration> enumerations;
  std::vector<Candidate> candidates;

  const Candidate* FindCandidate(std::string_view candidate_id) const;
};

// The three stages composed. Errors carry the failing stage's name.
RunResult Run(const std::vector<TestPair>& corpus, const RunConfig& config,
              const StageContext& context);

// Fills the header counts from the stage outputs.
RunHeader MakeHeader(const RunConfig& config, const Translator& backend,
                     const ValidStage& valid, const CandidateStage& candidates);

}  // namespace probe

#endif  // PROBE_PIPELINE_H_
