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

// Declarative run configuration (YAML).
//
//   unit: char                    # char | word
//   valid_threshold: 0.5
//   candidate_threshold: 0.1
//   metric:
//     tokenization: auto          # auto | char | word
//     max_order: 4
//   backend:
//     kind: mock                  # mock | subprocess | http | precomputed
//     path: rules.json            # plus the kind's other parameters
//   lexicon: zh.lex               # optional
//   segmenter: ""                 # optional external word segmenter
//   seed: 0
//   skip_separator_deletion: false
//   batch_size: 64
//   parallelism: 0                # 0 = number of processors
//   model_label: En-Zh-1M
//   cache_dir: cache              # PROBE_CACHE_DIR wins; default <out>/cache
//   corpus:
//     tsv: test.tsv               # or source: + reference:
//   curve:
//     k_max: 5
//     samples_per_k: 10
//
// Relative paths resolve against the directory of the file.

#ifndef PROBE_CONFIG_H_
#define PROBE_CONFIG_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "probe/analysis.h"
#include "probe/pipeline.h"

namespace probe {

struct CorpusSource {
  std::optional<std::filesystem::path> tsv;
  std::optional<std::filesystem::path> source;
  std::optional<std::filesystem::path> reference;

  bool empty() const { return !tsv && !source; }
  // Throws kConfigError when neither form is set.
  std::vector<TestPair> Load() const;
};

struct ProbeConfig {
  RunConfig run;
  CorpusSource corpus;
  std::optional<std::filesystem::path> cache_dir;
  CurveOptions curve;
};

// Defaults with parallelism set to the processor count.
ProbeConfig DefaultProbeConfig();

// Throws kConfigError on unknown keys, bad values or unreadable files.
ProbeConfig LoadProbeConfig(const std::filesystem::path& path);
ProbeConfig ParseProbeConfig(const std::string& yaml, const std::filesystem::path& base_dir);

// PROBE_CACHE_DIR, then the configured directory, then <out>/cache.
std::filesystem::path ResolveCacheDir(const ProbeConfig& config,
                                      const std::filesystem::path& out_dir);

}  // namespace probe

#endif  // PROBE_CONFIG_H_
