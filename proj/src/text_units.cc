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

#include "probe/text_units.h"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "probe/error.h"
#include "probe/subprocess.h"
#include "probe/utf8.h"

namespace probe {

std::string_view UnitKindName(UnitKind unit) {
  return unit == UnitKind::kCharacter ? "char" : "word";
}

UnitKind ParseUnitKind(std::string_view name) {
  if (name == "char" || name == "character") return UnitKind::kCharacter;
  if (name == "word") return UnitKind::kWord;
  throw Error(ErrorCode::kConfigError,
              "unknown unit '" + std::string(name) + "' (expected char or word)");
}

Lexicon::Lexicon(const std::vector<std::string>& words) {
  for (const auto& w : words) Add(utf8::Decode(w));
}

void Lexicon::Add(std::u32string word) {
  if (word.empty()) return;
  max_entry_len_ = std::max(max_entry_len_, word.size());
  entries_.insert(std::move(word));
}

Lexicon Lexicon::Parse(std::istream& in) {
  Lexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::u32string word = utf8::Decode(line);
    while (!word.empty() && utf8::IsSeparator(word.back())) word.pop_back();
    std::size_t lead = 0;
    while (lead < word.size() && utf8::IsSeparator(word[lead])) ++lead;
    lexicon.Add(word.substr(lead));
  }
  return lexicon;
}

Lexicon Lexicon::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open lexicon " + path.string());
  }
  return Parse(in);
}

std::vector<UnitSpan> GreedySegment(std::u32string_view text,
                                    const Lexicon& lexicon) {
  std::vector<UnitSpan> spans;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t take = 1;
    const std::size_t longest = std::min(lexicon.max_entry_len(), text.size() - pos);
    for (std::size_t len = longest; len >= 2; --len) {
      if (lexicon.Contains(text.substr(pos, len))) {
        take = len;
        break;
      }
    }
    spans.push_back({spans.size(), utf8::Encode(text.substr(pos, take)), pos,
                     pos + take});
    pos += take;
  }
  return spans;
}

std::vector<UnitSpan> Segment(std::string_view text, UnitKind unit,
                              const Lexicon* lexicon) {
  const std::u32string scalars = utf8::Decode(text);
  std::vector<UnitSpan> spans;
  if (unit == UnitKind::kCharacter) {
    spans.reserve(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      spans.push_back({i, utf8::Encode(scalars[i]), i, i + 1});
    }
    return spans;
  }
  if (scalars.empty()) return spans;
  if (!utf8::ContainsSeparator(scalars)) {
    if (lexicon == nullptr || lexicon->empty()) {
      throw Error(ErrorCode::kUnsegmentableInput,
                  "word units requested for unspaced text without a lexicon");
    }
    return GreedySegment(scalars, *lexicon);
  }
  std::size_t i = 0;
  while (i < scalars.size()) {
    if (utf8::IsSeparator(scalars[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < scalars.size() && !utf8::IsSeparator(scalars[j])) ++j;
    spans.push_back({spans.size(),
                     utf8::Encode(std::u32string_view(scalars).substr(i, j - i)),
                     i, j});
    i = j;
  }
  return spans;
}

std::vector<UnitSpan> AlignUnits(std::string_view text,
                                 const std::vector<std::string>& units) {
  const std::u32string scalars = utf8::Decode(text);
  std::vector<UnitSpan> spans;
  std::size_t pos = 0;
  for (const auto& unit : units) {
    const std::u32string u = utf8::Decode(unit);
    if (u.empty()) continue;
    while (pos < scalars.size() && utf8::IsSeparator(scalars[pos])) ++pos;
    if (scalars.compare(pos, u.size(), u) != 0) {
      throw Error(ErrorCode::kProtocolViolation,
                  "segmenter unit '" + unit + "' does not match the text at offset " +
                      std::to_string(pos));
    }
    spans.push_back({spans.size(), unit, pos, pos + u.size()});
    pos += u.size();
  }
  while (pos < scalars.size() && utf8::IsSeparator(scalars[pos])) ++pos;
  if (pos != scalars.size()) {
    throw Error(ErrorCode::kProtocolViolation,
                "segmenter output does not cover the whole sentence");
  }
  return spans;
}

std::string DeleteUnits(std::string_view text, UnitKind unit,
                        std::span<const UnitSpan> spans,
                        std::span<const std::size_t> positions) {
  const std::u32string scalars = utf8::Decode(text);
  std::vector<bool> removed(spans.size(), false);
  for (std::size_t p : positions) {
    if (p >= spans.size()) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "unit index " + std::to_string(p) + " >= unit count " +
                      std::to_string(spans.size()));
    }
    removed[p] = true;
  }

  if (unit == UnitKind::kCharacter) {
    std::u32string out;
    out.reserve(scalars.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      out.append(scalars, next, spans[i].start - next);
      if (!removed[i]) out.append(scalars, spans[i].start, spans[i].end - spans[i].start);
      next = spans[i].end;
    }
    out.append(scalars, next, std::u32string::npos);
    return utf8::Encode(out);
  }

  // Words: walk gap, unit, gap, unit, ..., gap. Gaps hold separators (or are
  // empty for lexicon-segmented text).
  std::u32string out;
  std::u32string pending_gap;
  bool have_gap = false;
  bool emitted_unit = false;
  bool removed_since_last_unit = false;
  auto gap = [&](std::size_t from, std::size_t to) {
    return std::u32string_view(scalars).substr(from, to - from);
  };
  std::size_t cursor = 0;
  for (std::size_t i = 0; i <= spans.size(); ++i) {
    const std::size_t gap_end = i < spans.size() ? spans[i].start : scalars.size();
    const std::u32string_view g = gap(cursor, gap_end);
    if (!have_gap) {
      pending_gap = g;
      have_gap = true;
    } else if (!g.empty()) {
      // Two separator runs meet across a removed unit: keep one separator.
      if (pending_gap.empty()) {
        pending_gap = g;
      } else {
        pending_gap.resize(1);
      }
    }
    if (i == spans.size()) break;
    if (removed[i]) {
      removed_since_last_unit = true;
      cursor = spans[i].end;
      continue;
    }
    const bool leading_trim = !emitted_unit && removed_since_last_unit;
    if (!leading_trim) out += pending_gap;
    out.append(scalars, spans[i].start, spans[i].end - spans[i].start);
    emitted_unit = true;
    removed_since_last_unit = false;
    have_gap = false;
    pending_gap.clear();
    cursor = spans[i].end;
  }
  if (!removed_since_last_unit && emitted_unit) out += pending_gap;
  if (!emitted_unit) out.clear();
  return utf8::Encode(out);
}

Deletion DeleteAt(std::string_view text, UnitKind unit, std::size_t index,
                  const Lexicon* lexicon) {
  const auto spans = Segment(text, unit, lexicon);
  if (index >= spans.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "unit index " + std::to_string(index) + " >= unit count " +
                    std::to_string(spans.size()));
  }
  Deletion d;
  d.unit = unit;
  d.position = index;
  d.deleted_surface = spans[index].surface;
  d.start = spans[index].start;
  d.end = spans[index].end;
  const std::size_t positions[] = {index};
  d.perturbed_text = DeleteUnits(text, unit, spans, positions);
  return d;
}

std::vector<Deletion> EnumerateDeletions(std::string_view pair_id,
                                         std::string_view text, UnitKind unit,
                                         std::span<const UnitSpan> spans,
                                         const EnumerateOptions& options) {
  if (text.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot enumerate deletions of empty text");
  }
  std::vector<Deletion> out;
  out.reserve(spans.size());
  std::unordered_map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (options.skip_separators && unit == UnitKind::kCharacter &&
        utf8::IsSeparator(utf8::Decode(spans[i].surface).front())) {
      continue;
    }
    Deletion d;
    d.pair_id = std::string(pair_id);
    d.unit = unit;
    d.position = i;
    d.deleted_surface = spans[i].surface;
    d.start = spans[i].start;
    d.end = spans[i].end;
    const std::size_t positions[] = {i};
    d.perturbed_text = DeleteUnits(text, unit, spans, positions);
    auto [it, inserted] = first_seen.emplace(d.perturbed_text, i);
    if (!inserted) d.duplicate_of = it->second;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Deletion> EnumerateDeletions(std::string_view pair_id,
                                         std::string_view text, UnitKind unit,
                                         const Lexicon* lexicon,
                                         const EnumerateOptions& options) {
  const auto spans = Segment(text, unit, lexicon);
  return EnumerateDeletions(pair_id, text, unit, spans, options);
}

std::vector<std::vector<UnitSpan>> SubprocessSegmenter::SegmentAll(
    const std::vector<std::string>& sentences) const {
  for (const auto& s : sentences) {
    if (s.find('\n') != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "sentence contains a line break");
    }
  }
  const auto lines = RunLineFilter(command_, sentences);
  if (lines.size() != sentences.size()) {
    throw Error(ErrorCode::kProtocolViolation,
                "segmenter returned " + std::to_string(lines.size()) +
                    " lines for " + std::to_string(sentences.size()) + " sentences");
  }
  std::vector<std::vector<UnitSpan>> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<std::string> units;
    std::size_t begin = 0;
    const std::string& line = lines[i];
    while (begin <= line.size()) {
      std::size_t sp = line.find(' ', begin);
      if (sp == std::string::npos) sp = line.size();
      if (sp > begin) units.push_back(line.substr(begin, sp - begin));
      begin = sp + 1;
    }
    out.push_back(AlignUnits(sentences[i], units));
  }
  return out;
}

}  // namespace probe
