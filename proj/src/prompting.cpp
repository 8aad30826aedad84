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

#include "ppvlm/prompting.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ppvlm {

void PromptTemplate::validate() const {
  if (exemplar_separator.empty()) {
    throw Error(ErrorCode::kInvalidTemplate, "exemplar_separator must not be empty");
  }
  if (answer_label.empty()) throw Error(ErrorCode::kInvalidTemplate, "answer_label is empty");
  if (answer_label.find(exemplar_separator) != std::string::npos) {
    throw Error(ErrorCode::kInvalidTemplate, "answer_label contains the exemplar separator");
  }
  for (ModalityKind kind : kAllModalities) {
    const auto it = section_labels.find(kind);
    if (it == section_labels.end() || it->second.empty()) {
      throw Error(ErrorCode::kInvalidTemplate,
                  "missing section label for " + std::string(to_string(kind)));
    }
    if (it->second.find(exemplar_separator) != std::string::npos) {
      throw Error(ErrorCode::kInvalidTemplate, "section label for " +
                                                   std::string(to_string(kind)) +
                                                   " contains the exemplar separator");
    }
  }
}

PromptTemplate parse_template(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInvalidTemplate, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidTemplate, "template must be an object");

  PromptTemplate tmpl;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "instruction_preamble") {
        tmpl.instruction_preamble = value.get<std::string>();
      } else if (key == "exemplar_separator") {
        tmpl.exemplar_separator = value.get<std::string>();
      } else if (key == "answer_label") {
        tmpl.answer_label = value.get<std::string>();
      } else if (key == "unavailable_placeholder") {
        if (value.is_null()) {
          tmpl.unavailable_placeholder.reset();
        } else {
          tmpl.unavailable_placeholder = value.get<std::string>();
        }
      } else if (key == "section_labels") {
        for (const auto& [kind_name, label] : value.items()) {
          const auto kind = parse_modality_kind(kind_name);
          if (!kind) {
            throw Error(ErrorCode::kInvalidTemplate, "unknown modality \"" + kind_name + "\"");
          }
          tmpl.section_labels[*kind] = label.get<std::string>();
        }
      } else {
        throw Error(ErrorCode::kInvalidTemplate, "unknown template key \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidTemplate, e.what());
  }
  tmpl.validate();
  return tmpl;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_template(buffer.str());
}

std::string default_preamble(const ModalityMask& mask) {
  std::string out = "Summarize the video clip in one sentence using the information below.";
  if (mask.audio()) out += "\nTranscript: speech recognized from the clip audio.";
  if (mask.label()) out += "\nTopic: the label or category of the video.";
  if (mask.image()) out += "\nFrame: a caption of the middle frame of the clip.";
  if (mask.objects()) out += "\nObjects: noun phrases for objects segmented in the frame.";
  return out;
}

namespace {

std::string join_phrases(const std::vector<std::string>& phrases) {
  std::string out;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i) out += ", ";
    out += phrases[i];
  }
  return out;
}

}  // namespace

std::string render_block(const ModalityTexts& input, const ModalityMask& mask,
                         const PromptTemplate& tmpl,
                         const std::optional<std::string>& answer) {
  std::string out;
  auto section = [&](ModalityKind kind, const std::string& text) {
    if (!mask.has(kind)) return;
    if (text.empty() && !tmpl.unavailable_placeholder) return;
    out += tmpl.label(kind);
    out += ' ';
    out += text.empty() ? *tmpl.unavailable_placeholder : text;
    out += '\n';
  };
  section(ModalityKind::kAudio, input.audio_transcript);
  section(ModalityKind::kLabel, input.video_label);
  section(ModalityKind::kImage, input.image_caption);
  section(ModalityKind::kObjects, join_phrases(input.object_nouns));

  out += tmpl.answer_label;
  if (answer) {
    out += ' ';
    out += *answer;
  }
  return out;
}

std::string build_prompt(const FewShotState& state, const ModalityTexts& query,
                         const ModalityMask& mask, const PromptTemplate& tmpl,
                         std::size_t context_budget) {
  std::string prompt =
      tmpl.instruction_preamble.empty() ? default_preamble(mask) : tmpl.instruction_preamble;
  for (const auto& exemplar : state.exemplars) {
    prompt += tmpl.exemplar_separator;
    prompt += render_block(exemplar.input, mask, tmpl, exemplar.output);
  }
  prompt += tmpl.exemplar_separator;
  prompt += render_block(query, mask, tmpl, std::nullopt);

  if (context_budget > 0 && prompt.size() > context_budget) {
    throw Error(ErrorCode::kPromptTooLong,
                "prompt has " + std::to_string(prompt.size()) + " characters, limit " +
                    std::to_string(context_budget));
  }
  return prompt;
}

}  // namespace ppvlm
