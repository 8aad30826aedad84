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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppvlm/error.hpp"
#include "ppvlm/ingestion.hpp"

namespace ppvlm {

inline constexpr int kDefaultMaxNewTokens = 64;

struct GenerationRequest {
  std::string prompt;
  int max_new_tokens = kDefaultMaxNewTokens;
  std::vector<std::string> stop_sequences;
  double temperature = 0.0;

  // Throws InvalidRequest.
  void validate() const;
};

struct GenerationResponse {
  std::string text;
  std::string model_fingerprint;
  std::int64_t latency_ms = 0;
};

// Cuts `text` at the earliest occurrence of any stop sequence. The flag
// reports whether a cut happened.
std::pair<std::string, bool> truncate_at_stop(const std::string& text,
                                              const std::vector<std::string>& stops);

// Text generation contract. Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

// POST /v1/generate with body {prompt, max_new_tokens, stop, temperature},
// reply {text, model_fingerprint}. Throws Timeout or RemoteError(status).
// Text that still contains a stop sequence is cut client-side and reported
// through `warn`.
class RemoteBackend : public Backend {
 public:
  using WarnFn = std::function<void(const std::string&)>;

  explicit RemoteBackend(AdapterEndpoint endpoint, WarnFn warn = {});

  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  AdapterEndpoint endpoint_;
  WarnFn warn_;
};

enum class MockMode {
  kEchoLastAnswer,  // answer of the last exemplar block in the prompt
  kFixed,           // always fixed_text
  kLookup,          // first table key found in the query block
  kProgressive,     // lookup target, revealed in proportion to the shot count
};

std::string_view to_string(MockMode mode);
MockMode parse_mock_mode(std::string_view name);

struct MockConfig {
  MockMode mode = MockMode::kLookup;
  std::string fixed_text;
  // Ordered (sentinel, response) pairs searched in the query block.
  std::vector<std::pair<std::string, std::string>> table;
  // On a lookup miss: echo the last answer instead of returning fixed_text.
  bool fallback_to_echo = false;
  // Shot count at which kProgressive returns its whole target.
  int progressive_full_at = 5;
  // Must match the prompt template the prompts were built with.
  std::string exemplar_separator = "\n###\n";
  std::string answer_label = "Summary:";
};

// Deterministic backend: the response is a pure function of the request.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockConfig config);

  GenerationResponse generate(const GenerationRequest& request) override;

  const MockConfig& config() const { return config_; }

 private:
  std::string respond(const std::string& prompt) const;

  MockConfig config_;
};

// Decorator counting generate() calls, for call-budget checks.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend& inner) : inner_(inner) {}

  GenerationResponse generate(const GenerationRequest& request) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.generate(request);
  }

  std::size_t calls() const { return calls_.load(); }
  void reset() { calls_.store(0); }

 private:
  Backend& inner_;
  std::atomic<std::size_t> calls_{0};
};

struct BatchSlot {
  std::optional<GenerationResponse> response;
  std::optional<Error> error;

  bool ok() const { return response.has_value(); }
};

// Slot i always answers requests[i]; a failing request only fills its own
// slot. parallelism > 1 runs requests with OpenMP.
std::vector<BatchSlot> generate_batch(Backend& backend,
                                      const std::vector<GenerationRequest>& requests,
                                      int parallelism = 4);

}  // namespace ppvlm
