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

// Content-addressed, append-only translation cache.
//
// File layout (all integers little-endian):
//
//   header   8 bytes   "PRBC" 0x01 0x00 0x00 0x00   (magic, version, reserved)
//   record   32 bytes  key = SHA-256(fingerprint || 0x00 || source)
//            4 bytes   source length in bytes
//            4 bytes   translation length in bytes (T)
//            T bytes   translation, UTF-8
//            4 bytes   CRC-32 (zlib) of the preceding 40 + T record bytes
//
// A record cut short at end of file is a torn write: it is dropped and the
// file truncated on open. A complete record with a bad checksum, or a bad
// header, is CacheCorrupt. Later records for the same key win.

#ifndef PROBE_TRANSLATION_CACHE_H_
#define PROBE_TRANSLATION_CACHE_H_

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "probe/hashing.h"
#include "probe/translator.h"

namespace probe {

inline constexpr char kCacheMagic[4] = {'P', 'R', 'B', 'C'};
inline constexpr std::uint8_t kCacheVersion = 1;

class TranslationCache {
 public:
  // Opens or creates the cache file. Throws kCacheCorrupt or kIoError.
  explicit TranslationCache(std::filesystem::path path);
  ~TranslationCache();

  TranslationCache(const TranslationCache&) = delete;
  TranslationCache& operator=(const TranslationCache&) = delete;

  std::optional<std::string> Lookup(std::string_view fingerprint,
                                    std::string_view source) const;

  // Appends the entries and flushes them to stable storage before returning.
  void Store(std::string_view fingerprint,
             std::span<const std::pair<std::string, std::string>> entries);
  void Store(std::string_view fingerprint, std::string_view source,
             std::string_view translation);

  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }
  // Bytes of torn tail dropped when the file was opened.
  std::size_t recovered_bytes() const { return recovered_bytes_; }

  static Digest Key(std::string_view fingerprint, std::string_view source);

 private:
  struct DigestHash {
    std::size_t operator()(const Digest& d) const {
      std::size_t h;
      static_assert(sizeof(h) <= sizeof(Digest));
      std::memcpy(&h, d.data(), sizeof(h));
      return h;
    }
  };
  struct Entry {
    std::uint32_t source_len;
    std::string translation;
  };

  void Load();

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::size_t recovered_bytes_ = 0;
  mutable std::shared_mutex mutex_;
  std::unordered_map<Digest, Entry, DigestHash> entries_;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;          // distinct sources sent to the backend
  std::size_t backend_calls = 0;   // Translate() invocations
};

// Same result as TranslateBatch(). Only distinct cache misses reach the
// backend, each batch stored as soon as it returns so an interrupted run
// resumes from the cache.
std::vector<std::string> TranslateCached(Translator& backend, TranslationCache& cache,
                                         std::span<const std::string> sources,
                                         const BatchOptions& options = {},
                                         CacheStats* stats = nullptr);

}  // namespace probe

#endif  // PROBE_TRANSLATION_CACHE_H_
