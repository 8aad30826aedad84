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

#include "ppvlm/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace ppvlm {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kRequiredFields[] = {"clip_id", "video_id", "category",
                                                "start_s", "end_s", "reference_summary"};
constexpr std::string_view kOptionalFields[] = {"audio_transcript", "video_label",
                                                "image_caption", "object_nouns"};

bool known_field(std::string_view key) {
  for (auto f : kRequiredFields) if (f == key) return true;
  for (auto f : kOptionalFields) if (f == key) return true;
  return false;
}

ClipRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("record is not an object");
  for (const auto& [key, value] : j.items()) {
    if (!known_field(key)) throw std::invalid_argument("unknown field \"" + key + "\"");
  }
  for (auto f : kRequiredFields) {
    if (!j.contains(f)) throw std::invalid_argument("missing field \"" + std::string(f) + "\"");
  }
  ClipRecord r;
  r.clip_id = j.at("clip_id").get<std::string>();
  r.video_id = j.at("video_id").get<std::string>();
  r.category = j.at("category").get<std::string>();
  r.time_span.start_s = j.at("start_s").get<double>();
  r.time_span.end_s = j.at("end_s").get<double>();
  r.reference_summary = j.at("reference_summary").get<std::string>();
  r.modalities.audio_transcript = j.value("audio_transcript", std::string{});
  r.modalities.video_label = j.value("video_label", std::string{});
  r.modalities.image_caption = j.value("image_caption", std::string{});
  if (j.contains("object_nouns")) {
    r.modalities.object_nouns = j.at("object_nouns").get<std::vector<std::string>>();
  }
  return r;
}

ordered_json record_to_json(const ClipRecord& r) {
  ordered_json j;
  j["clip_id"] = r.clip_id;
  j["video_id"] = r.video_id;
  j["category"] = r.category;
  j["start_s"] = r.time_span.start_s;
  j["end_s"] = r.time_span.end_s;
  j["reference_summary"] = r.reference_summary;
  j["audio_transcript"] = r.modalities.audio_transcript;
  j["video_label"] = r.modalities.video_label;
  j["image_caption"] = r.modalities.image_caption;
  j["object_nouns"] = r.modalities.object_nouns;
  return j;
}

std::string join_lines(const std::vector<std::size_t>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(lines[i]);
  }
  return out;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'' ||
         static_cast<unsigned char>(c) >= 0x80;
}

std::vector<std::string> chunk_tokens(std::string_view caption) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    // Hyphens and apostrophes only survive inside a word.
    std::size_t b = 0, e = current.size();
    while (b < e && (current[b] == '-' || current[b] == '\'')) ++b;
    while (e > b && (current[e - 1] == '-' || current[e - 1] == '\'')) --e;
    if (e > b) tokens.push_back(ascii_lower(std::string_view(current).substr(b, e - b)));
    current.clear();
  };
  for (char c : caption) {
    if (is_word_char(c)) {
      current += c;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw Error(ErrorCode::kConfigError, "unknown split \"" + std::string(name) + "\"");
}

Manifest parse_manifest(std::string_view text, std::string dataset_name, Split split,
                        std::string_view source) {
  Manifest manifest;
  manifest.dataset_name = std::move(dataset_name);
  manifest.split = split;

  std::vector<std::size_t> line_of_record;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
    if (!blank) {
      try {
        manifest.records.push_back(record_from_json(nlohmann::json::parse(line)));
        line_of_record.push_back(line_no);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kMalformedLine, std::string(source) + ":" +
                                                   std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
  }

  std::vector<std::string> failures;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto issues = validate_clip(manifest.records[i]);
    if (issues.empty()) continue;
    std::string reasons;
    for (auto issue : issues) {
      if (!reasons.empty()) reasons += ", ";
      reasons += to_string(issue);
    }
    failures.push_back("clip \"" + manifest.records[i].clip_id + "\" (line " +
                       std::to_string(line_of_record[i]) + "): " + reasons);
  }

  std::map<std::string, std::vector<std::size_t>> lines_by_id;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    lines_by_id[manifest.records[i].clip_id].push_back(line_of_record[i]);
  }
  for (const auto& [id, lines] : lines_by_id) {
    if (lines.size() > 1) {
      failures.push_back("clip \"" + id + "\" duplicated on lines " + join_lines(lines));
    }
  }

  if (!failures.empty()) {
    std::string msg = std::string(source) + ": ";
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (i) msg += "; ";
      msg += failures[i];
    }
    throw Error(ErrorCode::kValidationFailed, msg);
  }
  return manifest;
}

Manifest load_manifest(const fs::path& path, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.stem().string(), split, path.string());
}

std::string serialize_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << serialize_manifest(manifest);
}

std::int64_t select_middle_frame(TimeSpan span, double fps) {
  if (!(span.end_s > span.start_s) || span.start_s < 0.0) {
    throw Error(ErrorCode::kInvalidSpan, "time span must satisfy 0 <= start < end");
  }
  if (!(fps > 0.0)) throw Error(ErrorCode::kNonPositiveFps, "fps must be positive");
  const double midpoint_frame = (span.start_s + span.end_s) / 2.0 * fps;
  return static_cast<std::int64_t>(std::floor(midpoint_frame + 0.5));
}

const std::set<std::string>& default_noun_stopwords() {
  static const std::set<std::string> kStopwords = {
      // articles and determiners
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every",
      "another", "other", "its", "his", "her", "their", "our", "my", "your", "no",
      // prepositions
      "about", "above", "across", "after", "against", "along", "among", "around", "at",
      "before", "behind", "below", "beneath", "beside", "between", "by", "down", "during",
      "for", "from", "in", "inside", "into", "near", "of", "off", "on", "onto", "out",
      "outside", "over", "through", "to", "toward", "towards", "under", "up", "upon",
      "with", "within", "without",
      // conjunctions, auxiliaries and pronouns that break phrases
      "and", "or", "but", "is", "are", "was", "were", "be", "been", "being", "has", "have",
      "it", "they", "there", "he", "she", "we", "you", "i", "them", "him"};
  return kStopwords;
}

std::vector<std::string> extract_object_nouns(const std::vector<std::string>& patch_captions,
                                              const std::set<std::string>& stopwords) {
  std::vector<std::string> phrases;
  std::unordered_set<std::string> seen;
  auto emit = [&](std::string phrase) {
    if (!phrase.empty() && seen.insert(phrase).second) phrases.push_back(std::move(phrase));
  };
  for (const auto& caption : patch_captions) {
    std::string run;
    for (const auto& token : chunk_tokens(caption)) {
      if (stopwords.count(token)) {
        emit(std::move(run));
        run.clear();
      } else {
        if (!run.empty()) run += ' ';
        run += token;
      }
    }
    emit(std::move(run));
  }
  return phrases;
}

void validate_endpoint(const AdapterEndpoint& endpoint) {
  if (endpoint.base_url.empty()) throw Error(ErrorCode::kConfigError, "adapter URL is empty");
  if (endpoint.timeout_ms <= 0) throw Error(ErrorCode::kConfigError, "timeout_ms must be > 0");
  if (endpoint.max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
}

AdapterEndpoint resolve_endpoint(AdapterEndpoint endpoint) {
  if (const char* env = std::getenv("PPVLM_ADAPTER_URL"); env != nullptr && *env != '\0') {
    endpoint.base_url = env;
  }
  validate_endpoint(endpoint);
  return endpoint;
}

// ---------------------------------------------------------------------------
// Cache

ModalityCache::ModalityCache(fs::path dir) : dir_(std::move(dir)) {}

namespace {

fs::path payload_path(const fs::path& dir, const std::string& clip_id, ModalityKind kind) {
  return dir / std::string(to_string(kind)) / (clip_id + ".txt");
}

fs::path fingerprint_path(const fs::path& dir, const std::string& clip_id, ModalityKind kind) {
  return dir / std::string(to_string(kind)) / (clip_id + ".fingerprint");
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_atomically(const fs::path& path, std::string_view content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace

std::optional<CacheEntry> ModalityCache::lookup(
    const std::string& clip_id, ModalityKind kind,
    const std::optional<std::string>& pinned_fingerprint) const {
  const auto payload = read_file(payload_path(dir_, clip_id, kind));
  if (!payload) return std::nullopt;
  const std::string key = std::string(to_string(kind)) + "/" + clip_id;
  const auto fingerprint = read_file(fingerprint_path(dir_, clip_id, kind));
  if (!fingerprint || fingerprint->empty()) {
    throw Error(ErrorCode::kCacheCorrupt, key + ": missing fingerprint sidecar");
  }
  if (pinned_fingerprint && *pinned_fingerprint != *fingerprint) return std::nullopt;

  CacheEntry entry;
  entry.clip_id = clip_id;
  entry.kind = kind;
  entry.adapter_fingerprint = *fingerprint;
  if (kind == ModalityKind::kObjects) {
    std::istringstream lines(*payload);
    for (std::string line; std::getline(lines, line);) {
      if (line.empty()) throw Error(ErrorCode::kCacheCorrupt, key + ": empty phrase line");
      entry.phrases.push_back(line);
    }
  } else {
    entry.text = *payload;
  }
  return entry;
}

void ModalityCache::store(const CacheEntry& entry) {
  std::string payload;
  if (entry.kind == ModalityKind::kObjects) {
    for (const auto& p : entry.phrases) {
      payload += p;
      payload += '\n';
    }
  } else {
    payload = entry.text;
  }
  std::lock_guard<std::mutex> lock(write_mutex_);
  fs::create_directories(dir_ / std::string(to_string(entry.kind)));
  // Payload last: a reader that sees the payload also sees its fingerprint.
  write_atomically(fingerprint_path(dir_, entry.clip_id, entry.kind), entry.adapter_fingerprint);
  write_atomically(payload_path(dir_, entry.clip_id, entry.kind), payload);
}

// ---------------------------------------------------------------------------
// Hydration

std::string clip_audio_uri(const ClipRecord& record) {
  std::ostringstream uri;
  uri << record.video_id << "#t=" << record.time_span.start_s << ',' << record.time_span.end_s;
  return uri.str();
}

namespace {

struct HydrateTask {
  std::size_t record;
  ModalityKind kind;
};

// Objects from an adapter are normalized to satisfy the ModalityTexts
// invariant: lowercase, no empties, no duplicates.
std::vector<std::string> normalize_phrases(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : raw) {
    auto lowered = ascii_lower(p);
    if (!lowered.empty() && seen.insert(lowered).second) out.push_back(std::move(lowered));
  }
  return out;
}

}  // namespace

HydrateResult hydrate_modalities(const Manifest& manifest, AdapterClient& adapter,
                                 ModalityCache& cache, const HydrateOptions& options) {
  HydrateResult result;
  result.manifest = manifest;
  auto& records = result.manifest.records;

  std::vector<HydrateTask> tasks;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& m = records[i].modalities;
    if (options.wanted.label() && m.video_label.empty()) m.video_label = records[i].category;
    if (options.wanted.audio() && m.audio_transcript.empty()) {
      tasks.push_back({i, ModalityKind::kAudio});
    }
    if (options.wanted.image() && m.image_caption.empty()) {
      tasks.push_back({i, ModalityKind::kImage});
    }
    if (options.wanted.objects() && m.object_nouns.empty()) {
      tasks.push_back({i, ModalityKind::kObjects});
    }
  }

  const auto n = static_cast<std::ptrdiff_t>(tasks.size());
  std::vector<CacheEntry> entries(tasks.size());
  std::vector<char> from_adapter(tasks.size(), 0);
  std::vector<std::exception_ptr> failures(tasks.size());

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.parallelism))
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const auto& task = tasks[static_cast<std::size_t>(t)];
    const ClipRecord& record = manifest.records[task.record];
    auto& entry = entries[static_cast<std::size_t>(t)];
    try {
      if (auto hit = cache.lookup(record.clip_id, task.kind, options.pinned_fingerprint)) {
        entry = std::move(*hit);
        continue;
      }
      entry.clip_id = record.clip_id;
      entry.kind = task.kind;
      if (task.kind == ModalityKind::kAudio) {
        auto r = adapter.transcribe(record.clip_id, clip_audio_uri(record));
        entry.text = std::move(r.text);
        entry.adapter_fingerprint = std::move(r.model_fingerprint);
      } else {
        const auto frame = select_middle_frame(record.time_span, options.fps);
        if (task.kind == ModalityKind::kImage) {
          auto r = adapter.caption(record.clip_id, frame);
          entry.text = std::move(r.text);
          entry.adapter_fingerprint = std::move(r.model_fingerprint);
        } else {
          auto r = adapter.objects(record.clip_id, frame);
          entry.phrases = normalize_phrases(r.nouns);
          entry.adapter_fingerprint = std::move(r.model_fingerprint);
        }
      }
      if (entry.adapter_fingerprint.empty()) entry.adapter_fingerprint = "unknown";
      cache.store(entry);
      from_adapter[static_cast<std::size_t>(t)] = 1;
    } catch (...) {
      failures[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }

  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    auto& m = records[tasks[t].record].modalities;
    switch (tasks[t].kind) {
      case ModalityKind::kAudio: m.audio_transcript = entries[t].text; break;
      case ModalityKind::kImage: m.image_caption = entries[t].text; break;
      case ModalityKind::kObjects: m.object_nouns = entries[t].phrases; break;
      case ModalityKind::kLabel: break;
    }
    if (from_adapter[t]) {
      ++result.adapter_calls;
    } else {
      ++result.cache_hits;
    }
  }
  return result;
}

}  // namespace ppvlm
