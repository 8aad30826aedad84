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

#include <doctest.h>

#include "ppvlm/prompting.hpp"
#include "test_support.hpp"

using namespace ppvlm;
using ppvlm::testing::error_code_of;

namespace {

ModalityTexts texts(int i) {
  ModalityTexts t;
  t.audio_transcript = "speech " + std::to_string(i);
  t.video_label = "Pasta";
  t.image_caption = "frame " + std::to_string(i);
  t.object_nouns = {"pot", "red pan"};
  return t;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = haystack.find(needle); at != std::string::npos;
       at = haystack.find(needle, at + needle.size())) {
    ++n;
  }
  return n;
}

FewShotState state_of(int n) {
  FewShotState s;
  for (int i = 0; i < n; ++i) {
    s.exemplars.push_back({texts(i), "answer " + std::to_string(i), "c" + std::to_string(i)});
  }
  return s;
}

}  // namespace

TEST_CASE("block renders masked sections in A, L, I, O order") {
  const PromptTemplate tmpl;
  CHECK(render_block(texts(1), ModalityMask::all(), tmpl, std::nullopt) ==
        "Transcript: speech 1\nTopic: Pasta\nFrame: frame 1\nObjects: pot, red pan\nSummary:");
  CHECK(render_block(texts(1), ModalityMask::parse("IA"), tmpl, std::string("boil it")) ==
        "Transcript: speech 1\nFrame: frame 1\nSummary: boil it");
}

TEST_CASE("empty modalities are dropped unless a placeholder is set") {
  PromptTemplate tmpl;
  ModalityTexts t;
  t.video_label = "Salad";
  CHECK(render_block(t, ModalityMask::parse("ALI"), tmpl, std::nullopt) ==
        "Topic: Salad\nSummary:");
  tmpl.unavailable_placeholder = "(none)";
  CHECK(render_block(t, ModalityMask::parse("ALI"), tmpl, std::nullopt) ==
        "Transcript: (none)\nTopic: Salad\nFrame: (none)\nSummary:");
}

TEST_CASE("5 exemplars give 5 answered blocks and one open query") {
  const PromptTemplate tmpl;
  const auto prompt = build_prompt(state_of(5), texts(9), ModalityMask::parse("ALI"), tmpl);
  CHECK(count(prompt, "Summary:") == 6);
  CHECK(count(prompt, tmpl.exemplar_separator) == 6);
  CHECK(prompt.rfind("Summary:") == prompt.size() - 8);
  for (int i = 0; i < 5; ++i) CHECK(count(prompt, "Summary: answer " + std::to_string(i)) == 1);
  CHECK(prompt.find("answer 0") < prompt.find("answer 4"));
  CHECK(prompt.rfind("Transcript: speech 9") > prompt.rfind("answer 4"));
}

TEST_CASE("zero-shot prompt is preamble plus query") {
  const PromptTemplate tmpl;
  const auto mask = ModalityMask::parse("AL");
  CHECK(build_prompt({}, texts(2), mask, tmpl) ==
        default_preamble(mask) + "\n###\nTranscript: speech 2\nTopic: Pasta\nSummary:");
}

TEST_CASE("default preamble lists only enabled modalities") {
  const auto p = default_preamble(ModalityMask::parse("AO"));
  CHECK(p.find("Transcript:") != std::string::npos);
  CHECK(p.find("Objects:") != std::string::npos);
  CHECK(p.find("Topic:") == std::string::npos);
  CHECK(p.find("Frame:") == std::string::npos);
}

TEST_CASE("prompt rendering is deterministic") {
  const PromptTemplate tmpl;
  CHECK(build_prompt(state_of(3), texts(4), ModalityMask::all(), tmpl) ==
        build_prompt(state_of(3), texts(4), ModalityMask::all(), tmpl));
}

TEST_CASE("context budget is a character limit") {
  const PromptTemplate tmpl;
  const auto full = build_prompt(state_of(2), texts(1), ModalityMask::all(), tmpl);
  CHECK(build_prompt(state_of(2), texts(1), ModalityMask::all(), tmpl, full.size()) == full);
  CHECK(error_code_of([&] {
          build_prompt(state_of(2), texts(1), ModalityMask::all(), tmpl, full.size() - 1);
        }) == ErrorCode::kPromptTooLong);
}

TEST_CASE("template json parsing") {
  const auto tmpl = parse_template(R"({
    "instruction_preamble": "Describe.",
    "section_labels": {"audio": "ASR:", "objects": "Things:"},
    "exemplar_separator": "\n---\n",
    "answer_label": "Caption:",
    "unavailable_placeholder": "n/a"
  })");
  CHECK(tmpl.instruction_preamble == "Describe.");
  CHECK(tmpl.label(ModalityKind::kAudio) == "ASR:");
  CHECK(tmpl.label(ModalityKind::kLabel) == "Topic:");
  CHECK(tmpl.label(ModalityKind::kObjects) == "Things:");
  CHECK(tmpl.exemplar_separator == "\n---\n");
  CHECK(tmpl.unavailable_placeholder == std::optional<std::string>("n/a"));

  CHECK(error_code_of([] { parse_template(R"({"preamble": "x"})"); }) ==
        ErrorCode::kInvalidTemplate);
  CHECK(error_code_of([] { parse_template(R"({"section_labels": {"smell": "x"}})"); }) ==
        ErrorCode::kInvalidTemplate);
  CHECK(error_code_of([] { parse_template(R"({"exemplar_separator": ""})"); }) ==
        ErrorCode::kInvalidTemplate);
  CHECK(error_code_of([] { parse_template("[1]"); }) == ErrorCode::kInvalidTemplate);
  CHECK(error_code_of([] { parse_template(R"({"answer_label": "A\n###\nB"})"); }) ==
        ErrorCode::kInvalidTemplate);
}

TEST_CASE("bundled default template equals the built-in one") {
  const auto tmpl = load_template(ppvlm::testing::source_dir() / "configs" / "template_default.json");
  const PromptTemplate builtin;
  CHECK(tmpl.section_labels == builtin.section_labels);
  CHECK(tmpl.exemplar_separator == builtin.exemplar_separator);
  CHECK(tmpl.answer_label == builtin.answer_label);
  CHECK_FALSE(tmpl.unavailable_placeholder.has_value());
}
