// Copyright 2026 The Authors.
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ppvlm/core_types.hpp"

namespace ppvlm {

enum class Split { kTrain, kValidation, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct Manifest {
  std::string dataset_name;
  std::vector<ClipRecord> records;
  Split split = Split::kTrain;

  bool operator==(const Manifest&) const = default;
};

// Reads a JSON Lines manifest, one clip object per line. Blank lines are
// skipped. The dataset name is the file stem. Throws FileNotFound,
// MalformedLine (with the 1-based line number) or ValidationFailed (every
// invalid clip and every duplicated clip_id, each with its line numbers).
Manifest load_manifest(const std::filesystem::path& path, Split split = Split::kTrain);

// Parses manifest text; `source` only labels error messages.
Manifest parse_manifest(std::string_view text, std::string dataset_name, Split split,
                        std::string_view source = "<memory>");

// Canonical serialization: fixed field order, all ten fields present, one
// line per record, trailing newline.
std::string serialize_manifest(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Frame index of the clip midpoint, round half up. Throws InvalidSpan or
// NonPositiveFps.
std::int64_t select_middle_frame(TimeSpan span, double fps);

const std::set<std::string>& default_noun_stopwords();

// Rule-based noun-phrase chunker: tokens are split on whitespace and
// punctuation (inner hyphens and apostrophes kept), lowercased, and every
// maximal run of non-stopword tokens becomes a phrase. Phrases are
// deduplicated keeping the first occurrence.
std::vector<std::string> extract_object_nouns(const std::vector<std::string>& patch_captions,
                                              const std::set<std::string>& stopwords);

struct AdapterEndpoint {
  std::string base_url = "http://127.0.0.1:8080";
  int timeout_ms = 120000;
  int max_retries = 2;
  int backoff_base_ms = 250;
};

// Throws ConfigError on an empty URL, a non-positive timeout or a negative
// retry count.
void validate_endpoint(const AdapterEndpoint& endpoint);

// PPVLM_ADAPTER_URL, when set and non-empty, replaces base_url; then
// validates.
AdapterEndpoint resolve_endpoint(AdapterEndpoint endpoint);

struct AdapterText {
  std::string text;
  std::string model_fingerprint;
};

struct AdapterNouns {
  std::vector<std::string> nouns;
  std::string model_fingerprint;
};

// Client side of the adapter wire protocol. Implementations must be safe
// for concurrent calls.
class AdapterClient {
 public:
  virtual ~AdapterClient() = default;
  virtual AdapterText transcribe(const std::string& clip_id, const std::string& audio_uri) = 0;
  virtual AdapterText caption(const std::string& clip_id, std::int64_t frame_index) = 0;
  virtual AdapterNouns objects(const std::string& clip_id, std::int64_t frame_index) = 0;
};

struct CacheEntry {
  std::string clip_id;
  ModalityKind kind = ModalityKind::kAudio;
  std::string text;                  // audio / label / image payload
  std::vector<std::string> phrases;  // objects payload
  std::string adapter_fingerprint;

  bool operator==(const CacheEntry&) const = default;
};

// On-disk cache: <dir>/<kind>/<clip_id>.txt holds the payload (objects one
// phrase per line) and <clip_id>.fingerprint the adapter fingerprint.
// Concurrent readers are fine; writes to a key are serialized in-process and
// land atomically through a rename.
class ModalityCache {
 public:
  explicit ModalityCache(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  // A pinned fingerprint that differs from the stored one counts as a miss.
  // Throws CacheCorrupt when a payload exists without a fingerprint.
  std::optional<CacheEntry> lookup(const std::string& clip_id, ModalityKind kind,
                                   const std::optional<std::string>& pinned_fingerprint =
                                       std::nullopt) const;
  void store(const CacheEntry& entry);

 private:
  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

struct HydrateOptions {
  ModalityMask wanted = ModalityMask::all();
  double fps = 30.0;
  int parallelism = 4;
  std::optional<std::string> pinned_fingerprint;
};

struct HydrateResult {
  Manifest manifest;
  std::size_t adapter_calls = 0;
  std::size_t cache_hits = 0;
};

// Audio URI sent to /v1/transcribe: "<video_id>#t=<start>,<end>".
std::string clip_audio_uri(const ClipRecord& record);

// Fills every wanted modality that is empty in the record, from the cache
// first and the adapter on a miss. An empty label is taken from the clip's
// category (metadata), never from the adapter. The result does not depend on
// call completion order.
HydrateResult hydrate_modalities(const Manifest& manifest, AdapterClient& adapter,
                                 ModalityCache& cache, const HydrateOptions& options);

}  // namespace ppvlm
