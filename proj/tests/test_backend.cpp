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

#include "ppvlm/backend.hpp"
#include "ppvlm/metrics.hpp"
#include "ppvlm/prompting.hpp"
#include "test_support.hpp"

using namespace ppvlm;
using namespace ppvlm::testing;

namespace {

ModalityTexts query_texts(const std::string& speech) {
  ModalityTexts t;
  t.audio_transcript = speech;
  t.video_label = "Pasta";
  return t;
}

FewShotState shots(int n) {
  FewShotState s;
  for (int i = 0; i < n; ++i) {
    s.exemplars.push_back({query_texts("shot " + std::to_string(i)),
                           "answer number " + std::to_string(i), "s" + std::to_string(i)});
  }
  return s;
}

GenerationRequest request(const FewShotState& state, const std::string& speech) {
  GenerationRequest r;
  r.prompt = build_prompt(state, query_texts(speech), ModalityMask::parse("AL"), PromptTemplate{});
  r.stop_sequences = {"\n###\n"};
  return r;
}

}  // namespace

TEST_CASE("request validation") {
  GenerationRequest r;
  CHECK(error_code_of([&] { r.validate(); }) == ErrorCode::kInvalidRequest);
  r.prompt = "x";
  CHECK_NOTHROW(r.validate());
  r.max_new_tokens = 0;
  CHECK(error_code_of([&] { r.validate(); }) == ErrorCode::kInvalidRequest);
  r.max_new_tokens = 4;
  r.temperature = -0.5;
  CHECK(error_code_of([&] { r.validate(); }) == ErrorCode::kInvalidRequest);
}

TEST_CASE("stop truncation cuts at the earliest stop") {
  CHECK(truncate_at_stop("abc###def", {"###"}) == std::pair<std::string, bool>{"abc", true});
  CHECK(truncate_at_stop("a.b,c", {",", "."}) == std::pair<std::string, bool>{"a", true});
  CHECK(truncate_at_stop("plain", {"###", ""}) == std::pair<std::string, bool>{"plain", false});
}

TEST_CASE("echo_last returns the last exemplar answer") {
  MockConfig c;
  c.mode = MockMode::kEchoLastAnswer;
  c.fixed_text = "nothing";
  MockBackend mock(c);
  CHECK(mock.generate(request(shots(3), "q")).text == "answer number 2");
  CHECK(mock.generate(request(shots(0), "q")).text == "nothing");
  CHECK(mock.generate(request(shots(1), "q")).model_fingerprint == "mock-echo_last-v1");
}

TEST_CASE("lookup prefers an exact query block over a substring hit") {
  MockConfig c;
  c.mode = MockMode::kLookup;
  c.fixed_text = "miss";
  const std::string block = render_block(query_texts("boil water"), ModalityMask::parse("AL"),
                                         PromptTemplate{}, std::nullopt);
  c.table = {{"boil", "substring hit"}, {block, "exact hit"}};
  MockBackend mock(c);
  CHECK(mock.generate(request(shots(2), "boil water")).text == "exact hit");
  CHECK(mock.generate(request(shots(2), "boil milk")).text == "substring hit");
  CHECK(mock.generate(request(shots(2), "fry eggs")).text == "miss");
  c.fallback_to_echo = true;
  CHECK(MockBackend(c).generate(request(shots(2), "fry eggs")).text == "answer number 1");
}

TEST_CASE("lookup only searches the query block") {
  MockConfig c;
  c.mode = MockMode::kLookup;
  c.fixed_text = "miss";
  c.table = {{"shot 0", "found in exemplar"}};
  CHECK(MockBackend(c).generate(request(shots(1), "query")).text == "miss");
}

TEST_CASE("progressive mock reveals more words with more shots") {
  MockConfig c;
  c.mode = MockMode::kProgressive;
  c.table = {{"target", "one two three four five six"}};
  c.progressive_full_at = 5;
  MockBackend mock(c);
  std::size_t previous = 0;
  for (int k = 0; k <= 6; ++k) {
    const auto text = mock.generate(request(shots(k), "target")).text;
    const auto words = tokenize(text).size();
    CHECK(words >= previous);
    previous = words;
    if (k >= 5) CHECK(text == "one two three four five six");
  }
  CHECK(mock.generate(request(shots(0), "target")).text == "one");
}

TEST_CASE("mock output is truncated at stop sequences") {
  MockConfig c;
  c.mode = MockMode::kFixed;
  c.fixed_text = "keep this\n###\ndrop this";
  CHECK(MockBackend(c).generate(request(shots(0), "q")).text == "keep this");
}

TEST_CASE("mock mode names") {
  for (auto m : {MockMode::kEchoLastAnswer, MockMode::kFixed, MockMode::kLookup, MockMode::kProgressive}) {
    CHECK(parse_mock_mode(to_string(m)) == m);
  }
  CHECK(error_code_of([] { parse_mock_mode("random"); }) == ErrorCode::kConfigError);
}

TEST_CASE("remote backend posts the documented body") {
  FakeAdapterServer server;
  server.generate_fn = [](const std::string& prompt) { return "len " + std::to_string(prompt.size()); };
  RemoteBackend remote(server.endpoint());
  GenerationRequest r;
  r.prompt = "hello";
  r.max_new_tokens = 12;
  r.stop_sequences = {"\n###\n"};
  const auto response = remote.generate(r);
  CHECK(response.text == "len 5");
  CHECK(response.model_fingerprint == "fake-llm-v1");
  const auto body = server.requests().at(0).second;
  CHECK(body == R"({"prompt":"hello","max_new_tokens":12,"stop":["\n###\n"],"temperature":0.0})");
}

TEST_CASE("remote backend truncates unapplied stops and warns") {
  FakeAdapterServer server;
  server.generate_fn = [](const std::string&) { return std::string("summary\n###\nmore"); };
  std::vector<std::string> warnings;
  RemoteBackend remote(server.endpoint(), [&](const std::string& w) { warnings.push_back(w); });
  GenerationRequest r;
  r.prompt = "p";
  r.stop_sequences = {"\n###\n"};
  CHECK(remote.generate(r).text == "summary");
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].rfind("StopNotApplied", 0) == 0);
}

TEST_CASE("remote failures map to RemoteError and Timeout") {
  FakeAdapterServer server;
  auto e = server.endpoint();
  e.max_retries = 0;
  RemoteBackend remote(e);
  GenerationRequest r;
  r.prompt = "p";
  server.fail_next(1, 500);
  CHECK(error_code_of([&] { remote.generate(r); }) == ErrorCode::kRemoteError);

  server.delay_ms = 600;
  e.timeout_ms = 150;
  RemoteBackend slow(e);
  CHECK(error_code_of([&] { slow.generate(r); }) == ErrorCode::kTimeout);
  server.delay_ms = 0;

  AdapterEndpoint dead;
  dead.base_url = dead_url();
  dead.max_retries = 0;
  CHECK(error_code_of([&] { RemoteBackend(dead).generate(r); }) == ErrorCode::kRemoteError);
}

TEST_CASE("batch slots are isolated and ordered") {
  class Flaky : public Backend {
   public:
    GenerationResponse generate(const GenerationRequest& r) override {
      if (r.prompt == "bad") throw Error(ErrorCode::kRemoteError, "boom");
      return {"re: " + r.prompt, "flaky", 0};
    }
  } flaky;
  std::vector<GenerationRequest> requests(9);
  for (int i = 0; i < 9; ++i) requests[static_cast<std::size_t>(i)].prompt = i == 4 ? "bad" : "p" + std::to_string(i);
  for (int p : {1, 4}) {
    const auto slots = generate_batch(flaky, requests, p);
    REQUIRE(slots.size() == 9);
    for (int i = 0; i < 9; ++i) {
      const auto& s = slots[static_cast<std::size_t>(i)];
      if (i == 4) {
        CHECK_FALSE(s.ok());
        CHECK(s.error->code() == ErrorCode::kRemoteError);
      } else {
        CHECK(s.response->text == "re: p" + std::to_string(i));
      }
    }
  }
}

TEST_CASE("counting backend counts every call") {
  MockConfig c;
  c.mode = MockMode::kFixed;
  c.fixed_text = "x";
  MockBackend mock(c);
  CountingBackend counting(mock);
  std::vector<GenerationRequest> requests(17, request(shots(1), "q"));
  generate_batch(counting, requests, 4);
  CHECK(counting.calls() == 17);
  counting.reset();
  CHECK(counting.calls() == 0);
}
