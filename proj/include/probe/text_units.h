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

// Deletable units of a sentence and the minimal perturbations built from them.
//
// Offsets and lengths are counted in Unicode scalar values. A unit is either a
// single scalar (Character) or a word (Word). Words of separator-delimited
// text are maximal runs of non-separator scalars, so trailing punctuation stays
// attached to its word. Unspaced text (e.g. Chinese) is split by greedy
// longest match against a Lexicon, or by an external segmenter whose output is
// aligned back onto the text with AlignUnits().

#ifndef PROBE_TEXT_UNITS_H_
#define PROBE_TEXT_UNITS_H_

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace probe {

enum class UnitKind { kCharacter, kWord };

// "char" or "word".
std::string_view UnitKindName(UnitKind unit);
// Accepts "char", "character", "word". Throws kConfigError otherwise.
UnitKind ParseUnitKind(std::string_view name);

struct UnitSpan {
  std::size_t index = 0;
  std::string surface;
  std::size_t start = 0;  // scalar offset, inclusive
  std::size_t end = 0;    // scalar offset, exclusive

  friend bool operator==(const UnitSpan&, const UnitSpan&) = default;
};

class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& words);

  // One word per line; blank lines and lines starting with '#' are skipped.
  static Lexicon Parse(std::istream& in);
  static Lexicon Load(const std::filesystem::path& path);

  bool Contains(std::u32string_view word) const {
    return entries_.count(std::u32string(word)) != 0;
  }
  std::size_t max_entry_len() const { return max_entry_len_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  void Add(std::u32string word);

  std::unordered_set<std::u32string> entries_;
  std::size_t max_entry_len_ = 0;
};

// Provenance of one minimal perturbation.
struct Deletion {
  std::string pair_id;
  UnitKind unit = UnitKind::kCharacter;
  std::size_t position = 0;
  std::string deleted_surface;
  std::size_t start = 0;  // span of the deleted unit in the original text
  std::size_t end = 0;
  std::string perturbed_text;
  // Position of the first earlier record with the same perturbed_text.
  std::optional<std::size_t> duplicate_of;

  bool is_duplicate() const { return duplicate_of.has_value(); }
};

struct EnumerateOptions {
  // Character units only: skip separator scalars. Off by default; whitespace
  // deletion is a legitimate minimal perturbation.
  bool skip_separators = false;
};

// Greedy longest match over `lexicon`, single scalars where nothing matches.
std::vector<UnitSpan> GreedySegment(std::u32string_view text,
                                    const Lexicon& lexicon);

// Splits `text` into units. Throws kUnsegmentableInput for Word units on text
// without separators when `lexicon` is null or empty.
std::vector<UnitSpan> Segment(std::string_view text, UnitKind unit,
                              const Lexicon* lexicon = nullptr);

// Locates externally produced units in `text`, in order, skipping separators
// between them. Throws kProtocolViolation when the units do not tile the
// non-separator content of the text.
std::vector<UnitSpan> AlignUnits(std::string_view text,
                                 const std::vector<std::string>& units);

// Removes the units at `positions` (indices into `spans`, distinct) jointly.
// For Word units, separator runs made adjacent by a removal collapse into the
// first separator of the left run, and separators exposed at either end are
// trimmed.
std::string DeleteUnits(std::string_view text, UnitKind unit,
                        std::span<const UnitSpan> spans,
                        std::span<const std::size_t> positions);

Deletion DeleteAt(std::string_view text, UnitKind unit, std::size_t index,
                  const Lexicon* lexicon = nullptr);

// One record per unit in index order. Duplicated perturbed strings are marked,
// never dropped.
std::vector<Deletion> EnumerateDeletions(std::string_view pair_id,
                                         std::string_view text, UnitKind unit,
                                         std::span<const UnitSpan> spans,
                                         const EnumerateOptions& options = {});
std::vector<Deletion> EnumerateDeletions(std::string_view pair_id,
                                         std::string_view text, UnitKind unit,
                                         const Lexicon* lexicon = nullptr,
                                         const EnumerateOptions& options = {});

// External segmenter driven over the line protocol: one sentence per line in,
// the same number of lines out with units separated by single spaces.
class SubprocessSegmenter {
 public:
  explicit SubprocessSegmenter(std::string command)
      : command_(std::move(command)) {}

  std::vector<std::vector<UnitSpan>> SegmentAll(
      const std::vector<std::string>& sentences) const;

  const std::string& command() const { return command_; }

 private:
  std::string command_;
};

}  // namespace probe

#endif  // PROBE_TEXT_UNITS_H_
