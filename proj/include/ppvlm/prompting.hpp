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
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ppvlm/core_types.hpp"

namespace ppvlm {

struct PromptTemplate {
  // Empty means the default preamble, built from the mask.
  std::string instruction_preamble;
  std::map<ModalityKind, std::string> section_labels = {
      {ModalityKind::kAudio, "Transcript:"},
      {ModalityKind::kLabel, "Topic:"},
      {ModalityKind::kImage, "Frame:"},
      {ModalityKind::kObjects, "Objects:"}};
  std::string exemplar_separator = "\n###\n";
  std::string answer_label = "Summary:";
  // nullopt drops the section of an empty modality; a value is rendered in
  // its place.
  std::optional<std::string> unavailable_placeholder;

  // Throws InvalidTemplate when the separator occurs inside a label or a
  // label is missing or empty.
  void validate() const;

  const std::string& label(ModalityKind kind) const { return section_labels.at(kind); }
};

// Reads a flat JSON object whose keys are exactly the PromptTemplate field
// names (section_labels is an object keyed by audio/label/image/objects).
// Unknown keys are rejected.
PromptTemplate load_template(const std::filesystem::path& path);
PromptTemplate parse_template(const std::string& json_text);

std::string default_preamble(const ModalityMask& mask);

// One block: labelled sections in A, L, I, O order, then the answer label
// (followed by the answer when given). Lines are joined by '\n'.
std::string render_block(const ModalityTexts& input, const ModalityMask& mask,
                         const PromptTemplate& tmpl,
                         const std::optional<std::string>& answer);

// Preamble, then every exemplar block in selection order, then the
// unanswered query block, all joined by the exemplar separator.
// context_budget is a character limit; 0 disables it. Throws PromptTooLong.
std::string build_prompt(const FewShotState& state, const ModalityTexts& query,
                         const ModalityMask& mask, const PromptTemplate& tmpl,
                         std::size_t context_budget = 0);

}  // namespace ppvlm
