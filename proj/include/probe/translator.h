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

// Batch translation over pluggable backends.
//
// A Translator maps a batch of single-line sources to the same number of
// translations, position for position. Backends are black boxes; the
// harness never looks inside them beyond their fingerprint, which keys the
// persistent cache (see translation_cache.h).

#ifndef PROBE_TRANSLATOR_H_
#define PROBE_TRANSLATOR_H_

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace probe {

enum class BackendKind { kMockDictionary, kSubprocess, kHttpService, kPrecomputedFile };

std::string_view BackendKindName(BackendKind kind);
BackendKind ParseBackendKind(std::string_view name);

// Kind plus kind-specific parameters:
//   mock:        path (JSON rule file; optional, empty means identity)
//   subprocess:  command
//   http:        url, timeout_ms (default 30000)
//   precomputed: path (TSV source<TAB>translation)
struct BackendSpec {
  BackendKind kind = BackendKind::kMockDictionary;
  std::map<std::string, std::string> parameters;

  // Throws kConfigError when a required parameter is missing or unknown.
  void Validate() const;
  // Sorted-key JSON; the basis of the fingerprint.
  std::string Canonical() const;
};

class Translator {
 public:
  virtual ~Translator() = default;

  // Returns exactly sources.size() translations. Must be safe to call from
  // several threads at once.
  virtual std::vector<std::string> Translate(std::span<const std::string> sources) = 0;

  // Identifies the backend and everything that affects its output.
  virtual std::string Fingerprint() const = 0;
};

// Rule-driven stand-in for a trained model. It plants the output pathologies
// that severe errors show in practice: hallucinated fixed text, copying the
// source, and dropping part of it.
enum class MockAction { kMapTokens, kCopySource, kFixedOutput, kTruncateHalf };

std::string_view MockActionName(MockAction action);
MockAction ParseMockAction(std::string_view name);

struct MockRule {
  std::vector<std::string> require_tokens;  // all must be present
  std::vector<std::string> absent_tokens;   // none may be present
  MockAction action = MockAction::kMapTokens;
  std::string output;                       // kFixedOutput only

  bool Matches(std::span<const std::string> tokens) const;
};

enum class MockTokenMode { kWhitespace, kCharacter };

struct MockConfig {
  MockTokenMode token_mode = MockTokenMode::kWhitespace;
  // Source token -> target text (may hold several target tokens, or be empty
  // to drop the token). Unmapped tokens are copied.
  std::unordered_map<std::string, std::string> dictionary;
  // Ordered; first match wins; no match means kMapTokens.
  std::vector<MockRule> rules;

  static MockConfig FromJson(const nlohmann::json& j);
  static MockConfig Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
};

class MockTranslator : public Translator {
 public:
  explicit MockTranslator(MockConfig config);

  std::vector<std::string> Translate(std::span<const std::string> sources) override;
  std::string Fingerprint() const override { return fingerprint_; }

  std::string TranslateOne(std::string_view source) const;
  std::vector<std::string> Tokenize(std::string_view source) const;

  const MockConfig& config() const { return config_; }

 private:
  std::string MapTokens(std::span<const std::string> tokens) const;

  MockConfig config_;
  std::string fingerprint_;
};

// Drives an external decoder over the 1:1 line protocol.
class SubprocessTranslator : public Translator {
 public:
  explicit SubprocessTranslator(std::string command);
  std::vector<std::string> Translate(std::span<const std::string> sources) override;
  std::string Fingerprint() const override { return fingerprint_; }

 private:
  std::string command_;
  std::string fingerprint_;
};

// POST {"sources": [...]} -> {"translations": [...]}. Retries failed
// attempts with exponential backoff, then throws kBackendUnavailable.
class HttpTranslator : public Translator {
 public:
  struct Options {
    std::chrono::milliseconds timeout{30000};
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{100};
  };

  HttpTranslator(std::string url, Options options);
  std::vector<std::string> Translate(std::span<const std::string> sources) override;
  std::string Fingerprint() const override { return fingerprint_; }

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  Options options_;
  std::string fingerprint_;
};

// Looks translations up in a TSV file; a missing source is an error.
class PrecomputedTranslator : public Translator {
 public:
  explicit PrecomputedTranslator(const std::filesystem::path& path);
  std::vector<std::string> Translate(std::span<const std::string> sources) override;
  std::string Fingerprint() const override { return fingerprint_; }

 private:
  std::unordered_map<std::string, std::string> table_;
  std::string fingerprint_;
};

// Builds the backend described by `spec`. File-backed kinds fold a digest of
// the file contents into the fingerprint.
std::unique_ptr<Translator> MakeTranslator(const BackendSpec& spec);

struct BatchOptions {
  std::size_t batch_size = 64;
  std::size_t parallelism = 1;
};

// Splits `sources` into batches, dispatches up to `parallelism` at a time and
// reassembles positionally. Throws kInvalidArgument for an empty list or a
// source containing a line break, kProtocolViolation for a wrong-sized reply.
std::vector<std::string> TranslateBatch(Translator& backend,
                                        std::span<const std::string> sources,
                                        const BatchOptions& options = {});

}  // namespace probe

#endif  // PROBE_TRANSLATOR_H_
