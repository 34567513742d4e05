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

#include "probe/config.h"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "probe/error.h"
#include "probe/parallel.h"

namespace probe {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void Fail(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

void CheckKeys(const YAML::Node& node, const std::string& where,
               const std::set<std::string>& allowed) {
  if (!node.IsMap()) Fail(where + " must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (allowed.count(key) == 0) Fail("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T Get(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    Fail("bad value for '" + key + "'");
  }
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

std::vector<TestPair> CorpusSource::Load() const {
  if (tsv) return LoadCorpusTsv(*tsv);
  if (source && reference) return LoadCorpusAligned(*source, *reference);
  Fail("no corpus configured (corpus.tsv, or corpus.source and corpus.reference)");
}

ProbeConfig DefaultProbeConfig() {
  ProbeConfig c;
  c.run.parallelism = DefaultParallelism();
  return c;
}

ProbeConfig ParseProbeConfig(const std::string& yaml, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    Fail(std::string("YAML: ") + e.what());
  }
  ProbeConfig c = DefaultProbeConfig();
  if (root.IsNull()) return c;
  CheckKeys(root, "config",
            {"unit", "valid_threshold", "candidate_threshold", "metric", "backend", "lexicon",
             "segmenter", "seed", "skip_separator_deletion", "batch_size", "parallelism",
             "model_label", "cache_dir", "corpus", "curve"});
  RunConfig& r = c.run;
  try {
    if (root["unit"]) r.unit = ParseUnitKind(Get<std::string>(root["unit"], "unit"));
  } catch (const Error& e) {
    Fail(e.detail());
  }
  if (root["valid_threshold"]) {
    r.valid_threshold = Get<double>(root["valid_threshold"], "valid_threshold");
  }
  if (root["candidate_threshold"]) {
    r.candidate_threshold = Get<double>(root["candidate_threshold"], "candidate_threshold");
  }
  if (const auto m = root["metric"]) {
    CheckKeys(m, "metric", {"tokenization", "max_order"});
    if (m["tokenization"]) {
      const auto t = Get<std::string>(m["tokenization"], "metric.tokenization");
      if (t == "auto") {
        r.metric_tokenization.reset();
      } else {
        try {
          r.metric_tokenization = ParseMetricTokenization(t);
        } catch (const Error& e) {
          Fail(e.detail());
        }
      }
    }
    if (m["max_order"]) r.max_order = Get<int>(m["max_order"], "metric.max_order");
  }
  if (const auto b = root["backend"]) {
    if (!b.IsMap() || !b["kind"]) Fail("backend needs a kind");
    try {
      r.backend.kind = ParseBackendKind(Get<std::string>(b["kind"], "backend.kind"));
    } catch (const Error& e) {
      Fail(e.detail());
    }
    r.backend.parameters.clear();
    for (const auto& kv : b) {
      const auto key = kv.first.as<std::string>();
      if (key == "kind") continue;
      std::string value = Get<std::string>(kv.second, "backend." + key);
      if (key == "path") value = Resolve(base_dir, value).string();
      r.backend.parameters[key] = value;
    }
  }
  if (root["lexicon"]) r.lexicon_path = Resolve(base_dir, Get<std::string>(root["lexicon"], "lexicon"));
  if (root["segmenter"]) r.segmenter_command = Get<std::string>(root["segmenter"], "segmenter");
  if (root["seed"]) r.seed = Get<std::uint64_t>(root["seed"], "seed");
  if (root["skip_separator_deletion"]) {
    r.skip_separator_deletion = Get<bool>(root["skip_separator_deletion"], "skip_separator_deletion");
  }
  if (root["batch_size"]) {
    r.batch_size = Get<std::size_t>(root["batch_size"], "batch_size");
    if (r.batch_size == 0) Fail("batch_size must be positive");
  }
  if (root["parallelism"]) {
    const auto p = Get<std::size_t>(root["parallelism"], "parallelism");
    r.parallelism = p == 0 ? DefaultParallelism() : p;
  }
  if (root["model_label"]) r.model_label = Get<std::string>(root["model_label"], "model_label");
  if (root["cache_dir"]) c.cache_dir = Resolve(base_dir, Get<std::string>(root["cache_dir"], "cache_dir"));
  if (const auto corpus = root["corpus"]) {
    CheckKeys(corpus, "corpus", {"tsv", "source", "reference"});
    if (corpus["tsv"]) c.corpus.tsv = Resolve(base_dir, Get<std::string>(corpus["tsv"], "corpus.tsv"));
    if (corpus["source"]) {
      c.corpus.source = Resolve(base_dir, Get<std::string>(corpus["source"], "corpus.source"));
    }
    if (corpus["reference"]) {
      c.corpus.reference =
          Resolve(base_dir, Get<std::string>(corpus["reference"], "corpus.reference"));
    }
    if (c.corpus.tsv && (c.corpus.source || c.corpus.reference)) {
      Fail("corpus takes either tsv or source/reference, not both");
    }
    if (static_cast<bool>(c.corpus.source) != static_cast<bool>(c.corpus.reference)) {
      Fail("corpus.source and corpus.reference go together");
    }
  }
  if (const auto curve = root["curve"]) {
    CheckKeys(curve, "curve", {"k_max", "samples_per_k"});
    if (curve["k_max"]) c.curve.k_max = Get<std::size_t>(curve["k_max"], "curve.k_max");
    if (curve["samples_per_k"]) {
      c.curve.samples_per_k = Get<std::size_t>(curve["samples_per_k"], "curve.samples_per_k");
    }
  }
  c.curve.seed = r.seed;
  r.Validate();
  return c;
}

ProbeConfig LoadProbeConfig(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail("cannot read config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  try {
    return ParseProbeConfig(text.str(), base);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.detail());
  }
}

fs::path ResolveCacheDir(const ProbeConfig& config, const fs::path& out_dir) {
  if (const char* env = std::getenv("PROBE_CACHE_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env);
  }
  if (config.cache_dir) return *config.cache_dir;
  return out_dir / "cache";
}

}  // namespace probe
