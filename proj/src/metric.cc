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

#include "probe/metric.h"

#include <algorithm>
#include <cmath>

#include "probe/error.h"
#include "probe/utf8.h"

namespace probe {

std::string_view MetricTokenizationName(MetricTokenization scheme) {
  return scheme == MetricTokenization::kCharacterLevel ? "char" : "word";
}

MetricTokenization ParseMetricTokenization(std::string_view name) {
  if (name == "char" || name == "character") return MetricTokenization::kCharacterLevel;
  if (name == "word") return MetricTokenization::kWordLevel;
  throw Error(ErrorCode::kConfigError,
              "unknown metric tokenization '" + std::string(name) + "'");
}

std::string SmoothingPolicyDescription(int max_order) {
  return "sentence BLEU, max order " + std::to_string(max_order) +
         "; p1 unsmoothed (p1=0 => 0); p2..p" + std::to_string(max_order) +
         " add-one (m+1)/(c+1); BP=exp(1-r/c) when c<r; single reference";
}

std::vector<Token> MetricTokenize(std::string_view text,
                                  MetricTokenization scheme) {
  const std::u32string scalars = utf8::Decode(text);
  std::vector<Token> tokens;
  if (scheme == MetricTokenization::kCharacterLevel) {
    for (char32_t c : scalars) {
      if (!utf8::IsSeparator(c)) tokens.push_back(utf8::Encode(c));
    }
    return tokens;
  }
  std::u32string current;
  for (char32_t c : scalars) {
    if (utf8::IsSeparator(c)) {
      if (!current.empty()) tokens.push_back(utf8::Encode(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(utf8::Encode(current));
  return tokens;
}

MetricTokenization DefaultTokenizationFor(std::string_view reference) {
  return utf8::ContainsCjk(reference) ? MetricTokenization::kCharacterLevel
                                      : MetricTokenization::kWordLevel;
}

NgramCounts NgramCountsOf(std::span<const Token> tokens, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram order must be >= 1");
  NgramCounts counts;
  const auto order = static_cast<std::size_t>(n);
  if (tokens.size() < order) return counts;
  for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
    ++counts[std::vector<Token>(tokens.begin() + i, tokens.begin() + i + order)];
  }
  return counts;
}

BleuScore SentenceBleu(std::span<const Token> candidate,
                       std::span<const Token> reference, int max_order) {
  if (reference.empty()) {
    throw Error(ErrorCode::kEmptyReference, "reference has no tokens");
  }
  if (max_order < 1 || max_order > kMaxBleuOrder) {
    throw Error(ErrorCode::kInvalidArgument, "BLEU order must be in 1..4");
  }
  BleuScore score;
  score.max_order = max_order;
  score.candidate_len = candidate.size();
  score.reference_len = reference.size();
  score.precisions.fill(1.0);
  if (candidate.empty()) {
    // c = 0 makes exp(1 - r/c) degenerate; report the c = 1 penalty instead.
    score.precisions[0] = 0.0;
    score.value = 0.0;
    score.brevity_penalty = std::exp(1.0 - static_cast<double>(reference.size()));
    return score;
  }

  double log_sum = 0.0;
  for (int n = 1; n <= max_order; ++n) {
    const NgramCounts cand = NgramCountsOf(candidate, n);
    const NgramCounts ref = NgramCountsOf(reference, n);
    std::size_t total = 0;
    std::size_t matched = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      if (auto it = ref.find(gram); it != ref.end()) {
        matched += std::min(count, it->second);
      }
    }
    const double p = n == 1 ? static_cast<double>(matched) / static_cast<double>(total)
                            : (matched + 1.0) / (total + 1.0);
    score.precisions[n - 1] = p;
    if (p > 0.0) log_sum += std::log(p);
  }

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  score.brevity_penalty = c >= r ? 1.0 : std::exp(1.0 - r / c);
  if (score.precisions[0] == 0.0) {
    score.value = 0.0;
    return score;
  }
  score.value = score.brevity_penalty * std::exp(log_sum / max_order);
  // Saturated counts give exp(0) == 1 exactly; clamp rounding excursions.
  score.value = std::clamp(score.value, 0.0, 1.0);
  return score;
}

BleuScore SentenceBleu(std::string_view candidate, std::string_view reference,
                       MetricTokenization scheme, int max_order) {
  const auto cand = MetricTokenize(candidate, scheme);
  const auto ref = MetricTokenize(reference, scheme);
  return SentenceBleu(cand, ref, max_order);
}

double MeanBleu(std::span<const BleuScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyInput, "no scores to average");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.value;
  return sum / static_cast<double>(scores.size());
}

}  // namespace probe
