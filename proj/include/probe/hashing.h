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

#ifndef PROBE_HASHING_H_
#define PROBE_HASHING_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace probe {

using Digest = std::array<std::uint8_t, 32>;

Digest Sha256(std::string_view data);
std::string ToHex(const Digest& digest);
std::string Sha256Hex(std::string_view data);

}  // namespace probe

#endif  // PROBE_HASHING_H_
