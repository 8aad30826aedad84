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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ppvlm/error.hpp"

namespace ppvlm {

// The four text channels a clip is reduced to. Missing text is an empty
// string, never an absent value.
struct ModalityTexts {
  std::string audio_transcript;
  std::string video_label;
  std::string image_caption;
  std::vector<std::string> object_nouns;

  bool operator==(const ModalityTexts&) const = default;
};

enum class ModalityKind { kAudio, kLabel, kImage, kObjects };

inline constexpr ModalityKind kAllModalities[] = {
    ModalityKind::kAudio, ModalityKind::kLabel, ModalityKind::kImage,
    ModalityKind::kObjects};

std::string_view to_string(ModalityKind kind);
std::optional<ModalityKind> parse_modality_kind(std::string_view name);

// Subset of {A, L, I, O}. Textual form lists the set letters in A,L,I,O
// order, e.g. "ALI".
class ModalityMask {
 public:
  ModalityMask(bool audio, bool label, bool image, bool objects);

  // Throws ConfigError on unknown letters, repeats or an empty string.
  static ModalityMask parse(std::string_view text);
  static ModalityMask all() { return {true, true, true, true}; }

  bool audio() const { return audio_; }
  bool label() const { return label_; }
  bool image() const { return image_; }
  bool objects() const { return objects_; }
  bool has(ModalityKind kind) const;

  std::string to_string() const;

  bool operator==(const ModalityMask&) const = default;

 private:
  bool audio_;
  bool label_;
  bool image_;
  bool objects_;
};

struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  bool operator==(const TimeSpan&) const = default;
};

struct ClipRecord {
  std::string clip_id;
  std::string video_id;
  std::string category;
  TimeSpan time_span;
  std::string reference_summary;
  ModalityTexts modalities;

  bool operator==(const ClipRecord&) const = default;
};

enum class ClipIssue {
  kEmptyClipId,
  kEmptyReferenceSummary,
  kNegativeStart,
  kNonPositiveSpan,
  kEmptyObjectNoun,
  kDuplicateObjectNoun,
};

std::string_view to_string(ClipIssue issue);

// Every violated invariant, in a fixed order. Empty means the record is valid.
std::vector<ClipIssue> validate_clip(const ClipRecord& record);

// Returns the record unchanged or throws ValidationFailed listing all issues.
const ClipRecord& require_valid(const ClipRecord& record);

struct Exemplar {
  ModalityTexts input;
  std::string output;
  std::string source_clip_id;

  bool operator==(const Exemplar&) const = default;
};

// Throws ValidationFailed when the record has no reference summary.
Exemplar make_exemplar(const ClipRecord& record);

enum class Provenance { kRandom, kGreedy };

std::string_view to_string(Provenance provenance);

struct FewShotState {
  std::vector<Exemplar> exemplars;
  Provenance provenance = Provenance::kRandom;
  std::string metric_name;
  std::uint64_t seed = 0;

  std::vector<std::string> exemplar_ids() const;
  bool operator==(const FewShotState&) const = default;
};

// Throws ValidationFailed when two exemplars share a source clip id.
void require_distinct_sources(const FewShotState& state);

// Case-insensitive ASCII lowering shared by validation and tokenization.
std::string ascii_lower(std::string_view text);

}  // namespace ppvlm
