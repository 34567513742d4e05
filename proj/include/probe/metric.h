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

// Sentence-level BLEU with a fixed smoothing policy.
//
//   p_1 = m_1 / c_1                      (unsmoothed; p_1 = 0 => BLEU = 0)
//   p_n = (m_n + 1) / (c_n + 1), n >= 2
//   BP  = 1 if c >= r else exp(1 - r / c)
//   BLEU = BP * exp(mean_n ln p_n)
//
// where m_n are clipped n-gram matches and c_n the candidate n-gram count.
// A candidate too short for order n has c_n = m_n = 0 and so p_n = 1.

#ifndef PROBE_METRIC_H_
#define PROBE_METRIC_H_

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace probe {

enum class MetricTokenization { kCharacterLevel, kWordLevel };

std::string_view MetricTokenizationName(MetricTokenization scheme);
MetricTokenization ParseMetricTokenization(std::string_view name);

inline constexpr int kMaxBleuOrder = 4;

// Human-readable policy line echoed into run headers and reports.
std::string SmoothingPolicyDescription(int max_order = kMaxBleuOrder);

struct BleuScore {
  double value = 0.0;
  // precisions[n-1] = p_n; orders above the configured maximum stay at 1.
  std::array<double, kMaxBleuOrder> precisions{};
  double brevity_penalty = 1.0;
  std::size_t candidate_len = 0;
  std::size_t reference_len = 0;
  int max_order = kMaxBleuOrder;
};

using Token = std::string;
using NgramCounts = std::map<std::vector<Token>, std::size_t>;

std::vector<Token> MetricTokenize(std::string_view text,
                                  MetricTokenization scheme);

// CharacterLevel when the reference contains any CJK scalar, else WordLevel.
MetricTokenization DefaultTokenizationFor(std::string_view reference);

NgramCounts NgramCountsOf(std::span<const Token> tokens, int n);

// Throws kEmptyReference. `max_order` is in 1..4.
BleuScore SentenceBleu(std::span<const Token> candidate,
                       std::span<const Token> reference,
                       int max_order = kMaxBleuOrder);

// Tokenizes both sides with `scheme` and scores.
BleuScore SentenceBleu(std::string_view candidate, std::string_view reference,
                       MetricTokenization scheme, int max_order = kMaxBleuOrder);

// Arithmetic mean of the values. Throws kEmptyInput.
double MeanBleu(std::span<const BleuScore> scores);

}  // namespace probe

#endif  // PROBE_METRIC_H_
