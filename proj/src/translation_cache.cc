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

#include "probe/translation_cache.h"

#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <future>
#include <iterator>

#include "probe/error.h"

namespace probe {
namespace {

constexpr std::size_t kHeaderSize = 8;
constexpr std::size_t kRecordFixed = 32 + 4 + 4;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

std::uint32_t Crc(std::string_view bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string Header() {
  std::string h(kCacheMagic, sizeof(kCacheMagic));
  h.push_back(static_cast<char>(kCacheVersion));
  h.append(3, '\0');
  return h;
}

}  // namespace

Digest TranslationCache::Key(std::string_view fingerprint, std::string_view source) {
  std::string buf;
  buf.reserve(fingerprint.size() + 1 + source.size());
  buf.append(fingerprint);
  buf.push_back('\0');
  buf.append(source);
  return Sha256(buf);
}

TranslationCache::TranslationCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path_.parent_path(), ec);
  }
  Load();
  file_ = std::fopen(path_.c_str(), "ab");
  if (file_ == nullptr) throw Error(ErrorCode::kIoError, "cannot append to " + path_.string());
}

TranslationCache::~TranslationCache() {
  if (file_ != nullptr) std::fclose(file_);
}

void TranslationCache::Load() {
  if (!std::filesystem::exists(path_)) {
    std::ofstream out(path_, std::ios::binary);
    out << Header();
    if (!out) throw Error(ErrorCode::kIoError, "cannot create " + path_.string());
    return;
  }
  std::string data;
  {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path_.string());
    data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  if (data.size() < kHeaderSize) {
    // An interrupted creation leaves a short header; anything else is foreign.
    if (Header().compare(0, data.size(), data) != 0) {
      throw Error(ErrorCode::kCacheCorrupt, path_.string() + ": bad header");
    }
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out << Header();
    recovered_bytes_ = data.size();
    return;
  }
  if (data.compare(0, 4, kCacheMagic, 4) != 0) {
    throw Error(ErrorCode::kCacheCorrupt, path_.string() + ": bad magic");
  }
  if (static_cast<std::uint8_t>(data[4]) != kCacheVersion) {
    throw Error(ErrorCode::kCacheCorrupt,
                path_.string() + ": unsupported version " +
                    std::to_string(static_cast<unsigned char>(data[4])));
  }
  std::size_t pos = kHeaderSize;
  while (pos < data.size()) {
    if (data.size() - pos < kRecordFixed) break;
    const std::uint32_t source_len = GetU32(data, pos + 32);
    const std::uint32_t translation_len = GetU32(data, pos + 36);
    const std::size_t total = kRecordFixed + translation_len + 4;
    if (data.size() - pos < total) break;
    const std::uint32_t stored = GetU32(data, pos + kRecordFixed + translation_len);
    if (Crc(std::string_view(data).substr(pos, kRecordFixed + translation_len)) != stored) {
      throw Error(ErrorCode::kCacheCorrupt,
                  path_.string() + ": checksum mismatch at offset " + std::to_string(pos));
    }
    Digest key;
    std::memcpy(key.data(), data.data() + pos, key.size());
    entries_[key] = Entry{source_len, data.substr(pos + kRecordFixed, translation_len)};
    pos += total;
  }
  if (pos < data.size()) {
    recovered_bytes_ = data.size() - pos;
    std::filesystem::resize_file(path_, pos);
  }
}

std::optional<std::string> TranslationCache::Lookup(std::string_view fingerprint,
                                                    std::string_view source) const {
  const Digest key = Key(fingerprint, source);
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end() || it->second.source_len != source.size()) return std::nullopt;
  return it->second.translation;
}

void TranslationCache::Store(std::string_view fingerprint,
                             std::span<const std::pair<std::string, std::string>> entries) {
  if (entries.empty()) return;
  std::string blob;
  std::vector<std::pair<Digest, Entry>> staged;
  staged.reserve(entries.size());
  for (const auto& [source, translation] : entries) {
    const Digest key = Key(fingerprint, source);
    std::string record(reinterpret_cast<const char*>(key.data()), key.size());
    PutU32(record, static_cast<std::uint32_t>(source.size()));
    PutU32(record, static_cast<std::uint32_t>(translation.size()));
    record += translation;
    PutU32(record, Crc(record));
    blob += record;
    staged.push_back({key, Entry{static_cast<std::uint32_t>(source.size()), translation}});
  }
  std::unique_lock lock(mutex_);
  if (std::fwrite(blob.data(), 1, blob.size(), file_) != blob.size() ||
      std::fflush(file_) != 0 || ::fsync(::fileno(file_)) != 0) {
    throw Error(ErrorCode::kIoError, "cannot write " + path_.string());
  }
  for (auto& [key, entry] : staged) entries_[key] = std::move(entry);
}

void TranslationCache::Store(std::string_view fingerprint, std::string_view source,
                             std::string_view translation) {
  const std::pair<std::string, std::string> entry{std::string(source), std::string(translation)};
  Store(fingerprint, std::span(&entry, 1));
}

std::size_t TranslationCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<std::string> TranslateCached(Translator& backend, TranslationCache& cache,
                                         std::span<const std::string> sources,
                                         const BatchOptions& options, CacheStats* stats) {
  if (sources.empty()) throw Error(ErrorCode::kInvalidArgument, "no sources to translate");
  for (const auto& s : sources) {
    if (s.find_first_of("\r\n") != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "source contains a line break");
    }
  }
  const std::string fingerprint = backend.Fingerprint();

  std::unordered_map<std::string, std::string> resolved;
  std::vector<std::string> misses;
  std::size_t hits = 0;
  for (const auto& s : sources) {
    if (resolved.count(s) != 0) continue;
    if (auto hit = cache.Lookup(fingerprint, s)) {
      resolved.emplace(s, std::move(*hit));
      ++hits;
    } else {
      resolved.emplace(s, std::string());
      misses.push_back(s);
    }
  }

  const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
  const std::size_t width = std::max<std::size_t>(1, options.parallelism);
  std::atomic<std::size_t> calls{0};

  auto run_one = [&](std::size_t begin) {
    const std::size_t n = std::min(batch, misses.size() - begin);
    const auto slice = std::span<const std::string>(misses).subspan(begin, n);
    auto part = backend.Translate(slice);
    calls.fetch_add(1);
    if (part.size() != n) {
      throw Error(ErrorCode::kProtocolViolation,
                  "backend returned " + std::to_string(part.size()) + " translations for " +
                      std::to_string(n) + " sources");
    }
    std::vector<std::pair<std::string, std::string>> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) entries.emplace_back(slice[i], std::move(part[i]));
    cache.Store(fingerprint, entries);
    return entries;
  };

  std::vector<std::vector<std::pair<std::string, std::string>>> results;
  if (width == 1 || misses.size() <= batch) {
    for (std::size_t begin = 0; begin < misses.size(); begin += batch) {
      results.push_back(run_one(begin));
    }
  } else {
    std::vector<std::future<std::vector<std::pair<std::string, std::string>>>> inflight;
    for (std::size_t begin = 0; begin < misses.size(); begin += batch) {
      if (inflight.size() == width) {
        results.push_back(inflight.front().get());
        inflight.erase(inflight.begin());
      }
      inflight.push_back(std::async(std::launch::async, run_one, begin));
    }
    for (auto& f : inflight) results.push_back(f.get());
  }
  for (auto& entries : results) {
    for (auto& [source, translation] : entries) resolved[source] = std::move(translation);
  }

  if (stats != nullptr) {
    stats->hits += hits;
    stats->misses += misses.size();
    stats->backend_calls += calls.load();
  }
  std::vector<std::string> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(resolved.at(s));
  return out;
}

}  // namespace probe
