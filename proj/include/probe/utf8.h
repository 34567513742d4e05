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

#ifndef PROBE_UTF8_H_
#define PROBE_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace probe::utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws Error(kInvalidUtf8) on
// malformed input, overlong forms, surrogates or values above U+10FFFF.
std::u32string Decode(std::string_view text);

std::string Encode(std::u32string_view scalars);
std::string Encode(char32_t scalar);

bool IsValid(std::string_view text);

// Number of scalar values in valid UTF-8.
std::size_t Length(std::string_view text);

// Unicode White_Space property. These are the "separators" for word units
// and metric tokenization.
bool IsSeparator(char32_t c);

// Han ideographs, kana, hangul, CJK punctuation and fullwidth forms.
bool IsCjk(char32_t c);

bool ContainsSeparator(std::u32string_view text);
bool ContainsCjk(std::string_view text);

}  // namespace probe::utf8

#endif  // PROBE_UTF8_H_
