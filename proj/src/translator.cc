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

#include "probe/translator.h"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "httplib.h"
#include "json.hpp"
#include "probe/error.h"
#include "probe/hashing.h"
#include "probe/subprocess.h"
#include "probe/utf8.h"

namespace probe {
namespace {

using nlohmann::json;

std::string ReadFileOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& RequireParam(const BackendSpec& spec, const std::string& key) {
  auto it = spec.parameters.find(key);
  if (it == spec.parameters.end() || it->second.empty()) {
    throw Error(ErrorCode::kConfigError,
                std::string(BackendKindName(spec.kind)) + " backend requires '" + key + "'");
  }
  return it->second;
}

// Prefixes the inner fingerprint with the canonical spec so that every
// parameter, not only file contents, feeds the cache key.
class SpecFingerprinted : public Translator {
 public:
  SpecFingerprinted(std::unique_ptr<Translator> inner, const BackendSpec& spec)
      : inner_(std::move(inner)),
        fingerprint_(Sha256Hex(spec.Canonical() + "\n" + inner_->Fingerprint())) {}

  std::vector<std::string> Translate(std::span<const std::string> sources) override {
    return inner_->Translate(sources);
  }
  std::string Fingerprint() const override { return fingerprint_; }

 private:
  std::unique_ptr<Translator> inner_;
  std::string fingerprint_;
};

}  // namespace

std::string_view BackendKindName(BackendKind kind) {
  switch (kind) {
    case BackendKind::kMockDictionary: return "mock";
    case BackendKind::kSubprocess: return "subprocess";
    case BackendKind::kHttpService: return "http";
    case BackendKind::kPrecomputedFile: return "precomputed";
  }
  return "unknown";
}

BackendKind ParseBackendKind(std::string_view name) {
  if (name == "mock") return BackendKind::kMockDictionary;
  if (name == "subprocess") return BackendKind::kSubprocess;
  if (name == "http") return BackendKind::kHttpService;
  if (name == "precomputed") return BackendKind::kPrecomputedFile;
  throw Error(ErrorCode::kConfigError, "unknown backend kind '" + std::string(name) + "'");
}

void BackendSpec::Validate() const {
  static const std::map<BackendKind, std::vector<std::string>> kAllowed = {
      {BackendKind::kMockDictionary, {"path"}},
      {BackendKind::kSubprocess, {"command"}},
      {BackendKind::kHttpService, {"url", "timeout_ms"}},
      {BackendKind::kPrecomputedFile, {"path"}},
  };
  const auto& allowed = kAllowed.at(kind);
  for (const auto& [key, value] : parameters) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kConfigError, "unknown parameter '" + key + "' for " +
                                               std::string(BackendKindName(kind)) +
                                               " backend");
    }
  }
  switch (kind) {
    case BackendKind::kMockDictionary: break;
    case BackendKind::kSubprocess: RequireParam(*this, "command"); break;
    case BackendKind::kHttpService: RequireParam(*this, "url"); break;
    case BackendKind::kPrecomputedFile: RequireParam(*this, "path"); break;
  }
}

std::string BackendSpec::Canonical() const {
  json j;
  j["kind"] = std::string(BackendKindName(kind));
  j["parameters"] = json::object();
  for (const auto& [k, v] : parameters) j["parameters"][k] = v;
  return j.dump();
}

std::string_view MockActionName(MockAction action) {
  switch (action) {
    case MockAction::kMapTokens: return "map_tokens";
    case MockAction::kCopySource: return "copy_source";
    case MockAction::kFixedOutput: return "fixed_output";
    case MockAction::kTruncateHalf: return "truncate_half";
  }
  return "unknown";
}

MockAction ParseMockAction(std::string_view name) {
  if (name == "map_tokens") return MockAction::kMapTokens;
  if (name == "copy_source") return MockAction::kCopySource;
  if (name == "fixed_output") return MockAction::kFixedOutput;
  if (name == "truncate_half") return MockAction::kTruncateHalf;
  throw Error(ErrorCode::kConfigError, "unknown mock action '" + std::string(name) + "'");
}

bool MockRule::Matches(std::span<const std::string> tokens) const {
  auto has = [&](const std::string& t) {
    return std::find(tokens.begin(), tokens.end(), t) != tokens.end();
  };
  return std::all_of(require_tokens.begin(), require_tokens.end(), has) &&
         std::none_of(absent_tokens.begin(), absent_tokens.end(), has);
}

MockConfig MockConfig::FromJson(const json& j) {
  MockConfig config;
  try {
    const std::string mode = j.value("token_mode", std::string("whitespace"));
    if (mode == "whitespace") {
      config.token_mode = MockTokenMode::kWhitespace;
    } else if (mode == "character") {
      config.token_mode = MockTokenMode::kCharacter;
    } else {
      throw Error(ErrorCode::kConfigError, "unknown mock token_mode '" + mode + "'");
    }
    if (j.contains("dictionary")) {
      for (const auto& [k, v] : j.at("dictionary").items()) {
        config.dictionary[k] = v.get<std::string>();
      }
    }
    if (j.contains("rules")) {
      for (const auto& r : j.at("rules")) {
        MockRule rule;
        rule.require_tokens = r.value("require", std::vector<std::string>{});
        rule.absent_tokens = r.value("absent", std::vector<std::string>{});
        rule.action = ParseMockAction(r.at("action").get<std::string>());
        rule.output = r.value("output", std::string());
        config.rules.push_back(std::move(rule));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("bad mock rule file: ") + e.what());
  }
  return config;
}

MockConfig MockConfig::Load(const std::filesystem::path& path) {
  const std::string text = ReadFileOrThrow(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return FromJson(j);
}

json MockConfig::ToJson() const {
  json j;
  j["token_mode"] = token_mode == MockTokenMode::kWhitespace ? "whitespace" : "character";
  j["dictionary"] = json::object();
  for (const auto& [k, v] : dictionary) j["dictionary"][k] = v;
  j["rules"] = json::array();
  for (const auto& r : rules) {
    j["rules"].push_back({{"require", r.require_tokens},
                          {"absent", r.absent_tokens},
                          {"action", std::string(MockActionName(r.action))},
                          {"output", r.output}});
  }
  return j;
}

MockTranslator::MockTranslator(MockConfig config)
    : config_(std::move(config)),
      fingerprint_(Sha256Hex("mock\n" + config_.ToJson().dump())) {}

std::vector<std::string> MockTranslator::Tokenize(std::string_view source) const {
  std::vector<std::string> tokens;
  std::u32string current;
  for (char32_t c : utf8::Decode(source)) {
    if (utf8::IsSeparator(c)) {
      if (!current.empty()) tokens.push_back(utf8::Encode(current));
      current.clear();
    } else if (config_.token_mode == MockTokenMode::kCharacter) {
      tokens.push_back(utf8::Encode(c));
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(utf8::Encode(current));
  return tokens;
}

std::string MockTranslator::MapTokens(std::span<const std::string> tokens) const {
  const std::string_view joiner = config_.token_mode == MockTokenMode::kWhitespace ? " " : "";
  std::string out;
  for (const auto& token : tokens) {
    auto it = config_.dictionary.find(token);
    const std::string& piece = it == config_.dictionary.end() ? token : it->second;
    if (piece.empty()) continue;
    if (!out.empty()) out += joiner;
    out += piece;
  }
  return out;
}

std::string MockTranslator::TranslateOne(std::string_view source) const {
  const auto tokens = Tokenize(source);
  for (const auto& rule : config_.rules) {
    if (!rule.Matches(tokens)) continue;
    switch (rule.action) {
      case MockAction::kMapTokens: return MapTokens(tokens);
      case MockAction::kCopySource: return std::string(source);
      case MockAction::kFixedOutput: return rule.output;
      case MockAction::kTruncateHalf:
        return MapTokens(std::span(tokens).first(tokens.size() / 2));
    }
  }
  return MapTokens(tokens);
}

std::vector<std::string> MockTranslator::Translate(std::span<const std::string> sources) {
  std::vector<std::string> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(TranslateOne(s));
  return out;
}

SubprocessTranslator::SubprocessTranslator(std::string command)
    : command_(std::move(command)), fingerprint_(Sha256Hex("subprocess\n" + command_)) {}

std::vector<std::string> SubprocessTranslator::Translate(
    std::span<const std::string> sources) {
  std::vector<std::string> lines(sources.begin(), sources.end());
  auto out = RunLineFilter(command_, lines);
  if (out.size() != sources.size()) {
    throw Error(ErrorCode::kProtocolViolation,
                "translator returned " + std::to_string(out.size()) + " lines for " +
                    std::to_string(sources.size()) + " sources");
  }
  return out;
}

HttpTranslator::HttpTranslator(std::string url, Options options) : options_(options) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "http backend url needs a scheme: " + url);
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  base_ = url.substr(0, path_begin);
  path_ = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  fingerprint_ = Sha256Hex("http\n" + url);
}

std::vector<std::string> HttpTranslator::Translate(std::span<const std::string> sources) {
  const std::string body =
      json{{"sources", std::vector<std::string>(sources.begin(), sources.end())}}.dump();
  std::string last_error = "no attempt made";
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    httplib::Client client(base_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        options_.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    auto res = client.Post(path_, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      json reply;
      try {
        reply = json::parse(res->body);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kProtocolViolation, std::string("bad JSON reply: ") + e.what());
      }
      if (!reply.contains("translations") || !reply["translations"].is_array()) {
        throw Error(ErrorCode::kProtocolViolation, "reply lacks a translations array");
      }
      auto out = reply["translations"].get<std::vector<std::string>>();
      if (out.size() != sources.size()) {
        throw Error(ErrorCode::kProtocolViolation,
                    "service returned " + std::to_string(out.size()) + " translations for " +
                        std::to_string(sources.size()) + " sources");
      }
      return out;
    }
    if (attempt < options_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw Error(ErrorCode::kBackendUnavailable,
              base_ + path_ + " after " + std::to_string(options_.max_attempts) +
                  " attempts: " + last_error);
}

PrecomputedTranslator::PrecomputedTranslator(const std::filesystem::path& path) {
  const std::string text = ReadFileOrThrow(path);
  fingerprint_ = Sha256Hex("precomputed\n" + text);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::kConfigError, path.string() + ":" + std::to_string(lineno) +
                                               ": expected two tab-separated columns");
    }
    table_.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
}

std::vector<std::string> PrecomputedTranslator::Translate(
    std::span<const std::string> sources) {
  std::vector<std::string> out;
  out.reserve(sources.size());
  for (const auto& s : sources) {
    auto it = table_.find(s);
    if (it == table_.end()) {
      throw Error(ErrorCode::kMissingTranslation, "no precomputed translation for '" + s + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

std::unique_ptr<Translator> MakeTranslator(const BackendSpec& spec) {
  spec.Validate();
  std::unique_ptr<Translator> inner;
  switch (spec.kind) {
    case BackendKind::kMockDictionary: {
      auto it = spec.parameters.find("path");
      MockConfig config = it == spec.parameters.end() || it->second.empty()
                              ? MockConfig{}
                              : MockConfig::Load(it->second);
      inner = std::make_unique<MockTranslator>(std::move(config));
      break;
    }
    case BackendKind::kSubprocess:
      inner = std::make_unique<SubprocessTranslator>(spec.parameters.at("command"));
      break;
    case BackendKind::kHttpService: {
      HttpTranslator::Options options;
      if (auto it = spec.parameters.find("timeout_ms"); it != spec.parameters.end()) {
        try {
          options.timeout = std::chrono::milliseconds(std::stol(it->second));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kConfigError, "timeout_ms must be an integer");
        }
      }
      inner = std::make_unique<HttpTranslator>(spec.parameters.at("url"), options);
      break;
    }
    case BackendKind::kPrecomputedFile:
      inner = std::make_unique<PrecomputedTranslator>(spec.parameters.at("path"));
      break;
  }
  return std::make_unique<SpecFingerprinted>(std::move(inner), spec);
}

std::vector<std::string> TranslateBatch(Translator& backend,
                                        std::span<const std::string> sources,
                                        const BatchOptions& options) {
  if (sources.empty()) throw Error(ErrorCode::kInvalidArgument, "no sources to translate");
  for (const auto& s : sources) {
    if (s.find_first_of("\r\n") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "source contains a line break");
    }
  }
  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t width = std::max<std::size_t>(1, options.parallelism);
  std::vector<std::string> out(sources.size());

  auto run_one = [&](std::size_t begin) {
    const std::size_t n = std::min(batch, sources.size() - begin);
    auto part = backend.Translate(sources.subspan(begin, n));
    if (part.size() != n) {
      throw Error(ErrorCode::kProtocolViolation,
                  "backend returned " + std::to_string(part.size()) + " translations for " +
                      std::to_string(n) + " sources");
    }
    std::move(part.begin(), part.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
  };

  if (width == 1 || sources.size() <= batch) {
    for (std::size_t begin = 0; begin < sources.size(); begin += batch) run_one(begin);
    return out;
  }
  std::vector<std::future<void>> inflight;
  for (std::size_t begin = 0; begin < sources.size(); begin += batch) {
    if (inflight.size() == width) {
      inflight.front().get();
      inflight.erase(inflight.begin());
    }
    inflight.push_back(std::async(std::launch::async, run_one, begin));
  }
  for (auto& f : inflight) f.get();
  return out;
}

}  // namespace probe
