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

// Aggregates over a run: BLEU decline, Table-2-shaped summaries and the
// k-deletion decline curve.

#ifndef PROBE_ANALYSIS_H_
#define PROBE_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "probe/annotation.h"
#include "probe/pipeline.h"

namespace probe {

struct DeltaBleu {
  double abs = 0.0;  // enumeration mean - valid mean
  double pct = 0.0;  // abs / valid mean, in percent
};

// Throws kEmptyInput when either list is empty.
DeltaBleu ComputeDeltaBleu(std::span<const double> valid_scores,
                           std::span<const double> enumeration_scores);
DeltaBleu DeltaFromMeans(double valid_mean, double enumeration_mean);

// Display helpers. Rounding is half away from zero.
double RoundHalfAwayFromZero(double x, int decimals);
std::string FormatBleu(double value);          // .77, -.11, 1.00
std::string FormatCount(std::size_t n);        // 14,722
std::string FormatSignedPercent(double pct);   // -14.3%
// `fraction` as a percentage with 2 decimals, or one significant digit below
// 0.01%: 0.12%, 0.007%.
std::string FormatRate(double fraction);

struct SummaryRow {
  std::string model_label;
  double corpus_bleu = 0.0;
  UnitKind unit = UnitKind::kCharacter;
  std::size_t valid_count = 0;
  std::optional<double> mean_valid_bleu;
  std::size_t enumeration_count = 0;
  std::optional<double> mean_enumeration_bleu;
  std::optional<double> delta_abs;
  std::optional<double> delta_pct;  // percent
  std::size_t candidate_count = 0;
  std::size_t inability = 0;
  std::size_t missing_parts = 0;
  std::size_t irrelevant = 0;
  std::size_t word_changing = 0;
  std::size_t unlabeled = 0;
  std::size_t severe_total = 0;
  double severe_rate = 0.0;  // fraction of enumerations
};

// Raw inputs of one row, as read off a finished table.
struct SummaryCounts {
  std::string model_label;
  double corpus_bleu = 0.0;
  UnitKind unit = UnitKind::kCharacter;
  std::size_t valid_count = 0;
  double mean_valid_bleu = 0.0;
  std::size_t enumeration_count = 0;
  double mean_enumeration_bleu = 0.0;
  std::size_t candidate_count = 0;
  std::size_t inability = 0;
  std::size_t missing_parts = 0;
  std::size_t irrelevant = 0;
  std::size_t word_changing = 0;
};

SummaryRow SummarizeCounts(const SummaryCounts& counts);

// Throws kForeignAnnotation for labels on candidates outside `run`.
SummaryRow Summarize(const RunResult& run, const std::map<std::string, Annotation>& current);

nlohmann::json ToJson(const SummaryRow& row);
// One table, one line per row; `policy` is printed above it.
std::string RenderSummaryMarkdown(std::span<const SummaryRow> rows, const std::string& policy);

struct DeclinePoint {
  std::size_t k = 0;
  double mean_bleu = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t sample_count = 0;
};

struct CurveOptions {
  std::size_t k_max = 5;
  std::size_t samples_per_k = 10;
  std::uint64_t seed = 0;
};

struct CurveSkip {
  std::string pair_id;
  std::size_t units = 0;
};

struct DeclineCurve {
  CurveOptions options;
  UnitKind unit = UnitKind::kCharacter;
  std::vector<DeclinePoint> points;
  std::vector<CurveSkip> skipped;  // SentenceTooShort
};

// Mean and 95% normal-approximation interval. Throws kEmptyInput.
DeclinePoint SummarizeSamples(std::size_t k, std::span<const double> values);

// For each usable sentence, k, and sample: delete k distinct positions drawn
// uniformly without replacement, translate, score against the reference.
// Sentences with <= k_max units are skipped. Throws kInvalidArgument for
// k_max == 0 or samples_per_k == 0, kSentenceTooShort when nothing is usable.
DeclineCurve ComputeDeclineCurve(const std::vector<ValidSentence>& valid,
                                 const StageContext& context, const RunConfig& config,
                                 const CurveOptions& options);

// k distinct indices in [0, n), ascending.
std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t k,
                                                  std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit FitLine(std::span<const double> x, std::span<const double> y);
LinearFit FitCurve(const DeclineCurve& curve);

std::string CurveCsv(const DeclineCurve& curve);
nlohmann::json ToJson(const DeclineCurve& curve);
std::string CurveSvg(const DeclineCurve& curve);

}  // namespace probe

#endif  // PROBE_ANALYSIS_H_
