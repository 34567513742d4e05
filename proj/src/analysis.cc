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

#include "probe/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "probe/error.h"
#include "probe/parallel.h"

namespace probe {

using nlohmann::json;

namespace {

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string Printf(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [0, bound) by rejection.
std::uint64_t Bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

DeltaBleu DeltaFromMeans(double valid_mean, double enumeration_mean) {
  DeltaBleu d;
  d.abs = enumeration_mean - valid_mean;
  d.pct = valid_mean == 0.0 ? 0.0 : 100.0 * d.abs / valid_mean;
  return d;
}

DeltaBleu ComputeDeltaBleu(std::span<const double> valid_scores,
                           std::span<const double> enumeration_scores) {
  if (valid_scores.empty() || enumeration_scores.empty()) {
    throw Error(ErrorCode::kEmptyInput, "delta BLEU needs non-empty score lists");
  }
  return DeltaFromMeans(Mean(valid_scores), Mean(enumeration_scores));
}

double RoundHalfAwayFromZero(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

std::string FormatBleu(double value) {
  std::string s = Printf("%.2f", RoundHalfAwayFromZero(value, 2));
  if (s == "-0.00") s = "0.00";
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

std::string FormatCount(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

std::string FormatSignedPercent(double pct) {
  double r = RoundHalfAwayFromZero(pct, 1);
  if (r == 0.0) r = 0.0;  // no "-0.0"
  return Printf("%.1f", r) + "%";
}

std::string FormatRate(double fraction) {
  const double pct = 100.0 * fraction;
  if (pct == 0.0) return "0%";
  int decimals = 2;
  if (std::fabs(pct) < 0.01) {
    decimals = static_cast<int>(-std::floor(std::log10(std::fabs(pct))));
  }
  char fmt[16];
  std::snprintf(fmt, sizeof(fmt), "%%.%df", decimals);
  return Printf(fmt, RoundHalfAwayFromZero(pct, decimals)) + "%";
}

SummaryRow SummarizeCounts(const SummaryCounts& c) {
  SummaryRow row;
  row.model_label = c.model_label;
  row.corpus_bleu = c.corpus_bleu;
  row.unit = c.unit;
  row.valid_count = c.valid_count;
  row.mean_valid_bleu = c.mean_valid_bleu;
  row.enumeration_count = c.enumeration_count;
  row.mean_enumeration_bleu = c.mean_enumeration_bleu;
  const DeltaBleu d = DeltaFromMeans(c.mean_valid_bleu, c.mean_enumeration_bleu);
  row.delta_abs = d.abs;
  row.delta_pct = d.pct;
  row.candidate_count = c.candidate_count;
  row.inability = c.inability;
  row.missing_parts = c.missing_parts;
  row.irrelevant = c.irrelevant;
  row.word_changing = c.word_changing;
  const std::size_t labeled = c.inability + c.missing_parts + c.irrelevant + c.word_changing;
  row.unlabeled = c.candidate_count > labeled ? c.candidate_count - labeled : 0;
  row.severe_total = c.inability + c.missing_parts + c.irrelevant;
  row.severe_rate = c.enumeration_count == 0 ? 0.0
                                             : static_cast<double>(row.severe_total) /
                                                   static_cast<double>(c.enumeration_count);
  return row;
}

SummaryRow Summarize(const RunResult& run, const std::map<std::string, Annotation>& current) {
  const ErrorStats stats = ComputeErrorStats(current, run);
  SummaryRow row;
  row.model_label = run.header.config.model_label;
  row.corpus_bleu = run.header.corpus_mean_bleu;
  row.unit = run.header.config.unit;
  row.valid_count = run.valid.size();
  row.enumeration_count = run.enumerations.size();
  std::vector<double> valid_scores;
  for (const auto& v : run.valid) valid_scores.push_back(v.bleu.value);
  std::vector<double> enum_scores;
  for (const auto& e : run.enumerations) enum_scores.push_back(e.bleu.value);
  if (!valid_scores.empty()) row.mean_valid_bleu = Mean(valid_scores);
  if (!enum_scores.empty()) row.mean_enumeration_bleu = Mean(enum_scores);
  if (!valid_scores.empty() && !enum_scores.empty()) {
    const DeltaBleu d = ComputeDeltaBleu(valid_scores, enum_scores);
    row.delta_abs = d.abs;
    row.delta_pct = d.pct;
  }
  row.candidate_count = run.candidates.size();
  row.inability = stats.inability;
  row.missing_parts = stats.missing_parts;
  row.irrelevant = stats.irrelevant;
  row.word_changing = stats.word_changing;
  row.unlabeled = stats.unlabeled;
  row.severe_total = stats.severe_total;
  row.severe_rate = stats.severe_rate;
  return row;
}

json ToJson(const SummaryRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"model_label", r.model_label},
          {"corpus_bleu", r.corpus_bleu},
          {"unit", std::string(UnitKindName(r.unit))},
          {"valid_count", r.valid_count},
          {"mean_valid_bleu", opt(r.mean_valid_bleu)},
          {"enumeration_count", r.enumeration_count},
          {"mean_enumeration_bleu", opt(r.mean_enumeration_bleu)},
          {"delta_abs", opt(r.delta_abs)},
          {"delta_pct", opt(r.delta_pct)},
          {"candidate_count", r.candidate_count},
          {"inability", r.inability},
          {"missing_parts", r.missing_parts},
          {"irrelevant", r.irrelevant},
          {"word_changing", r.word_changing},
          {"unlabeled", r.unlabeled},
          {"severe_total", r.severe_total},
          {"severe_rate", r.severe_rate},
          {"display",
           {{"delta", r.delta_abs ? FormatBleu(*r.delta_abs) + " (" +
                                        FormatSignedPercent(*r.delta_pct) + ")"
                                  : "n/a"},
            {"total", std::to_string(r.severe_total) + " (" + FormatRate(r.severe_rate) + ")"}}}};
}

std::string RenderSummaryMarkdown(std::span<const SummaryRow> rows, const std::string& policy) {
  std::ostringstream out;
  out << "BLEU: " << policy << "\n\n";
  out << "| Model | BLEU | Del. | Valid | BLEU | Enum. | BLEU | ΔBLEU | Cand. | In. | MP | Irr. "
         "| Total Errors | WC | Unlabeled |\n";
  out << "|---|---|---|---:|---:|---:|---:|---|---:|---:|---:|---:|---|---:|---:|\n";
  auto opt = [](const std::optional<double>& v) { return v ? FormatBleu(*v) : std::string("n/a"); };
  for (const auto& r : rows) {
    out << "| " << (r.model_label.empty() ? "-" : r.model_label) << " | "
        << FormatBleu(r.corpus_bleu) << " | " << UnitKindName(r.unit) << " | "
        << FormatCount(r.valid_count) << " | " << opt(r.mean_valid_bleu) << " | "
        << FormatCount(r.enumeration_count) << " | " << opt(r.mean_enumeration_bleu) << " | "
        << (r.delta_abs ? FormatBleu(*r.delta_abs) + " (" + FormatSignedPercent(*r.delta_pct) + ")"
                        : std::string("n/a"))
        << " | " << FormatCount(r.candidate_count) << " | " << r.inability << " | "
        << r.missing_parts << " | " << r.irrelevant << " | " << r.severe_total << " ("
        << FormatRate(r.severe_rate) << ") | " << r.word_changing << " | " << r.unlabeled
        << " |\n";
  }
  return out.str();
}

DeclinePoint SummarizeSamples(std::size_t k, std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "no samples at k=" + std::to_string(k));
  DeclinePoint p;
  p.k = k;
  p.sample_count = values.size();
  p.mean_bleu = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - p.mean_bleu) * (v - p.mean_bleu);
  const double n = static_cast<double>(values.size());
  const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double half = 1.96 * sd / std::sqrt(n);
  p.ci_low = p.mean_bleu - half;
  p.ci_high = p.mean_bleu + half;
  return p;
}

std::vector<std::size_t> SampleWithoutReplacement(std::size_t n, std::size_t k,
                                                  std::uint64_t seed) {
  if (k > n) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot sample " + std::to_string(k) + " of " + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(Bounded(rng, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

DeclineCurve ComputeDeclineCurve(const std::vector<ValidSentence>& valid,
                                 const StageContext& context, const RunConfig& config,
                                 const CurveOptions& options) {
  if (options.k_max == 0 || options.samples_per_k == 0) {
    throw Error(ErrorCode::kInvalidArgument, "k_max and samples_per_k must be positive");
  }
  DeclineCurve curve;
  curve.options = options;
  curve.unit = config.unit;

  struct Usable {
    std::size_t index;
    std::vector<UnitSpan> spans;
  };
  std::vector<Usable> usable;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    auto spans = Segment(valid[i].pair.source, config.unit, context.lexicon);
    if (spans.size() <= options.k_max) {
      curve.skipped.push_back({valid[i].pair.pair_id, spans.size()});
      continue;
    }
    usable.push_back({i, std::move(spans)});
  }
  if (usable.empty()) {
    throw Error(ErrorCode::kSentenceTooShort,
                "no valid sentence has more than " + std::to_string(options.k_max) + " units");
  }

  const std::size_t per_k = options.samples_per_k;
  const std::size_t per_sentence = (options.k_max + 1) * per_k;
  std::vector<std::string> perturbed(usable.size() * per_sentence);
  ParallelFor(usable.size(), config.parallelism, [&](std::size_t u) {
    const auto& sentence = valid[usable[u].index];
    for (std::size_t k = 0; k <= options.k_max; ++k) {
      for (std::size_t s = 0; s < per_k; ++s) {
        std::uint64_t h = SplitMix(options.seed);
        h = SplitMix(h ^ usable[u].index);
        h = SplitMix(h ^ k);
        h = SplitMix(h ^ s);
        const auto positions = SampleWithoutReplacement(usable[u].spans.size(), k, h);
        perturbed[u * per_sentence + k * per_k + s] =
            DeleteUnits(sentence.pair.source, config.unit, usable[u].spans, positions);
      }
    }
  });

  std::vector<std::string> distinct;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto& p : perturbed) {
    if (slot.emplace(p, distinct.size()).second) distinct.push_back(p);
  }
  // Empty perturbations translate to the empty string.
  std::vector<std::string> to_send;
  for (const auto& d : distinct) {
    if (!d.empty()) to_send.push_back(d);
  }
  std::unordered_map<std::string, std::string> translated;
  if (!to_send.empty()) {
    const auto out = context.Translate(to_send, config);
    for (std::size_t i = 0; i < to_send.size(); ++i) translated[to_send[i]] = out[i];
  }

  std::vector<double> scores(perturbed.size());
  ParallelFor(usable.size(), config.parallelism, [&](std::size_t u) {
    const auto& reference = valid[usable[u].index].pair.reference;
    for (std::size_t j = 0; j < per_sentence; ++j) {
      const auto& p = perturbed[u * per_sentence + j];
      const std::string t = p.empty() ? std::string() : translated.at(p);
      scores[u * per_sentence + j] = config.Score(t, reference).value;
    }
  });

  for (std::size_t k = 0; k <= options.k_max; ++k) {
    std::vector<double> at_k;
    at_k.reserve(usable.size() * per_k);
    for (std::size_t u = 0; u < usable.size(); ++u) {
      for (std::size_t s = 0; s < per_k; ++s) at_k.push_back(scores[u * per_sentence + k * per_k + s]);
    }
    curve.points.push_back(SummarizeSamples(k, at_k));
  }
  return curve;
}

LinearFit FitLine(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "line fit needs two or more paired points");
  }
  const double mx = Mean(x);
  const double my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx == 0.0 ? 0.0 : sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

LinearFit FitCurve(const DeclineCurve& curve) {
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    x.push_back(static_cast<double>(p.k));
    y.push_back(p.mean_bleu);
  }
  return FitLine(x, y);
}

std::string CurveCsv(const DeclineCurve& curve) {
  std::string out = "k,mean_bleu,ci_low,ci_high,n\n";
  char buf[160];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%zu\n", p.k, p.mean_bleu, p.ci_low,
                  p.ci_high, p.sample_count);
    out += buf;
  }
  return out;
}

json ToJson(const DeclineCurve& curve) {
  json points = json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"k", p.k},
                      {"mean_bleu", p.mean_bleu},
                      {"ci_low", p.ci_low},
                      {"ci_high", p.ci_high},
                      {"n", p.sample_count}});
  }
  json skipped = json::array();
  for (const auto& s : curve.skipped) {
    skipped.push_back({{"pair_id", s.pair_id}, {"units", s.units}, {"reason", "SentenceTooShort"}});
  }
  const LinearFit fit = FitCurve(curve);
  return {{"unit", std::string(UnitKindName(curve.unit))},
          {"k_max", curve.options.k_max},
          {"samples_per_k", curve.options.samples_per_k},
          {"seed", curve.options.seed},
          {"points", points},
          {"linear_fit",
           {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r_squared", fit.r_squared}}},
          {"skipped", skipped}};
}

std::string CurveSvg(const DeclineCurve& curve) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 20, kBottom = 50;
  double lo = 1.0, hi = 0.0;
  for (const auto& p : curve.points) {
    lo = std::min(lo, p.ci_low);
    hi = std::max(hi, p.ci_high);
  }
  lo = std::max(0.0, std::floor(lo * 10.0) / 10.0);
  hi = std::min(1.0, std::ceil(hi * 10.0) / 10.0);
  if (hi <= lo) hi = lo + 0.1;
  const double kmax = std::max<double>(1.0, static_cast<double>(curve.options.k_max));
  auto px = [&](double k) { return kLeft + (kW - kLeft - kRight) * k / kmax; };
  auto py = [&](double v) { return kH - kBottom - (kH - kTop - kBottom) * (v - lo) / (hi - lo); };

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::string band;
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(static_cast<double>(p.k)), py(p.ci_high));
    band += buf;
  }
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(static_cast<double>(it->k)), py(it->ci_low));
    band += buf;
  }
  svg << "<polygon points=\"" << band << "\" fill=\"#9ecae1\" fill-opacity=\"0.5\"/>\n";
  std::string line;
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(static_cast<double>(p.k)), py(p.mean_bleu));
    line += buf;
  }
  svg << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n", kLeft,
                kH - kBottom, kW - kRight, kH - kBottom);
  svg << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n", kLeft,
                kTop, kLeft, kH - kBottom);
  svg << buf;
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.0f\" text-anchor=\"middle\">%zu</text>\n",
                  px(static_cast<double>(p.k)), kH - kBottom + 18, p.k);
    svg << buf;
  }
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    std::snprintf(buf, sizeof(buf), "<text x=\"%.0f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n",
                  kLeft - 6, py(v) + 4, v);
    svg << buf;
  }
  svg << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 10
      << "\" text-anchor=\"middle\">" << UnitKindName(curve.unit) << " units removed</text>\n";
  svg << "<text x=\"14\" y=\"" << (kTop + kH - kBottom) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << (kTop + kH - kBottom) / 2
      << ")\">mean BLEU</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace probe
