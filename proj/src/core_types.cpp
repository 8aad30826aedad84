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

#include "ppvlm/core_types.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace ppvlm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidationFailed: return "ValidationFailed";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kInvalidSpan: return "InvalidSpan";
    case ErrorCode::kNonPositiveFps: return "NonPositiveFps";
    case ErrorCode::kAdapterUnreachable: return "AdapterUnreachable";
    case ErrorCode::kAdapterError: return "AdapterError";
    case ErrorCode::kCacheCorrupt: return "CacheCorrupt";
    case ErrorCode::kPromptTooLong: return "PromptTooLong";
    case ErrorCode::kInvalidTemplate: return "InvalidTemplate";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownMetric: return "UnknownMetric";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRemoteError: return "RemoteError";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kPoolTooSmall: return "PoolTooSmall";
    case ErrorCode::kPoolExhausted: return "PoolExhausted";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kZeroNativeScore: return "ZeroNativeScore";
    case ErrorCode::kZeroBaseline: return "ZeroBaseline";
    case ErrorCode::kDegeneratePoints: return "DegeneratePoints";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

bool is_user_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAdapterError:
    case ErrorCode::kCacheCorrupt:
    case ErrorCode::kTimeout:
    case ErrorCode::kRemoteError:
    case ErrorCode::kBackendFailure:
    case ErrorCode::kIoError:
      return false;
    default:
      return true;
  }
}

std::string_view to_string(ModalityKind kind) {
  switch (kind) {
    case ModalityKind::kAudio: return "audio";
    case ModalityKind::kLabel: return "label";
    case ModalityKind::kImage: return "image";
    case ModalityKind::kObjects: return "objects";
  }
  return "unknown";
}

std::optional<ModalityKind> parse_modality_kind(std::string_view name) {
  for (ModalityKind kind : kAllModalities) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

ModalityMask::ModalityMask(bool audio, bool label, bool image, bool objects)
    : audio_(audio), label_(label), image_(image), objects_(objects) {
  if (!(audio || label || image || objects)) {
    throw Error(ErrorCode::kConfigError, "modality mask needs at least one of A, L, I, O");
  }
}

ModalityMask ModalityMask::parse(std::string_view text) {
  bool flags[4] = {false, false, false, false};
  constexpr std::string_view kLetters = "ALIO";
  for (char c : text) {
    const auto pos = kLetters.find(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (pos == std::string_view::npos) {
      throw Error(ErrorCode::kConfigError, "unknown modality letter '" + std::string(1, c) +
                                               "' in mask \"" + std::string(text) + "\"");
    }
    if (flags[pos]) {
      throw Error(ErrorCode::kConfigError, "repeated modality letter in mask \"" +
                                               std::string(text) + "\"");
    }
    flags[pos] = true;
  }
  return ModalityMask(flags[0], flags[1], flags[2], flags[3]);
}

bool ModalityMask::has(ModalityKind kind) const {
  switch (kind) {
    case ModalityKind::kAudio: return audio_;
    case ModalityKind::kLabel: return label_;
    case ModalityKind::kImage: return image_;
    case ModalityKind::kObjects: return objects_;
  }
  return false;
}

std::string ModalityMask::to_string() const {
  std::string out;
  if (audio_) out += 'A';
  if (label_) out += 'L';
  if (image_) out += 'I';
  if (objects_) out += 'O';
  return out;
}

std::string_view to_string(ClipIssue issue) {
  switch (issue) {
    case ClipIssue::kEmptyClipId: return "EmptyClipId";
    case ClipIssue::kEmptyReferenceSummary: return "EmptyReferenceSummary";
    case ClipIssue::kNegativeStart: return "NegativeStart";
    case ClipIssue::kNonPositiveSpan: return "NonPositiveSpan";
    case ClipIssue::kEmptyObjectNoun: return "EmptyObjectNoun";
    case ClipIssue::kDuplicateObjectNoun: return "DuplicateObjectNoun";
  }
  return "Unknown";
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<ClipIssue> validate_clip(const ClipRecord& record) {
  std::vector<ClipIssue> issues;
  if (record.clip_id.empty()) issues.push_back(ClipIssue::kEmptyClipId);
  if (record.reference_summary.empty()) issues.push_back(ClipIssue::kEmptyReferenceSummary);
  if (record.time_span.start_s < 0.0) issues.push_back(ClipIssue::kNegativeStart);
  // Written as a negation so NaN bounds are rejected too.
  if (!(record.time_span.end_s > record.time_span.start_s)) {
    issues.push_back(ClipIssue::kNonPositiveSpan);
  }

  std::unordered_set<std::string> seen;
  bool empty_noun = false;
  bool duplicate = false;
  for (const auto& noun : record.modalities.object_nouns) {
    if (noun.empty()) {
      empty_noun = true;
      continue;
    }
    if (!seen.insert(ascii_lower(noun)).second) duplicate = true;
  }
  if (empty_noun) issues.push_back(ClipIssue::kEmptyObjectNoun);
  if (duplicate) issues.push_back(ClipIssue::kDuplicateObjectNoun);
  return issues;
}

const ClipRecord& require_valid(const ClipRecord& record) {
  const auto issues = validate_clip(record);
  if (!issues.empty()) {
    std::string reasons;
    for (const auto issue : issues) {
      if (!reasons.empty()) reasons += ", ";
      reasons += to_string(issue);
    }
    throw Error(ErrorCode::kValidationFailed,
                "clip \"" + record.clip_id + "\": " + reasons);
  }
  return record;
}

Exemplar make_exemplar(const ClipRecord& record) {
  if (record.reference_summary.empty()) {
    throw Error(ErrorCode::kValidationFailed,
                "clip \"" + record.clip_id + "\" has no reference summary");
  }
  return Exemplar{record.modalities, record.reference_summary, record.clip_id};
}

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::kGreedy ? "greedy" : "random";
}

std::vector<std::string> FewShotState::exemplar_ids() const {
  std::vector<std::string> ids;
  ids.reserve(exemplars.size());
  for (const auto& e : exemplars) ids.push_back(e.source_clip_id);
  return ids;
}

void require_distinct_sources(const FewShotState& state) {
  std::unordered_set<std::string> seen;
  for (const auto& e : state.exemplars) {
    if (!seen.insert(e.source_clip_id).second) {
      throw Error(ErrorCode::kValidationFailed,
                  "few-shot state repeats clip \"" + e.source_clip_id + "\"");
    }
  }
}

}  // namespace ppvlm
