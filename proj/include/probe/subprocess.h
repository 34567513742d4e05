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

#ifndef PROBE_SUBPROCESS_H_
#define PROBE_SUBPROCESS_H_

#include <string>
#include <vector>

namespace probe {

// Runs `command` under /bin/sh -c, feeds `lines` (newline-terminated) to its
// standard input and returns its standard output split into lines. Throws
// kBackendUnavailable when the child cannot be started or exits non-zero.
// The caller checks line counts.
std::vector<std::string> RunLineFilter(const std::string& command,
                                       const std::vector<std::string>& lines);

}  // namespace probe

#endif  // PROBE_SUBPROCESS_H_
