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

#include "ppvlm/backend.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

#include <json.hpp>

#include "ppvlm/adapter_client.hpp"

namespace ppvlm {

void GenerationRequest::validate() const {
  if (prompt.empty()) throw Error(ErrorCode::kInvalidRequest, "prompt is empty");
  if (max_new_tokens < 1) throw Error(ErrorCode::kInvalidRequest, "max_new_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidRequest, "temperature must be >= 0");
}

std::pair<std::string, bool> truncate_at_stop(const std::string& text,
                                              const std::vector<std::string>& stops) {
  std::size_t cut = std::string::npos;
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    cut = std::min(cut, text.find(stop));
  }
  if (cut == std::string::npos) return {text, false};
  return {text.substr(0, cut), true};
}

// ---------------------------------------------------------------------------
// Remote

RemoteBackend::RemoteBackend(AdapterEndpoint endpoint, WarnFn warn)
    : endpoint_(std::move(endpoint)), warn_(std::move(warn)) {
  validate_endpoint(endpoint_);
  if (!warn_) {
    warn_ = [](const std::string& message) { std::cerr << "warning: " << message << '\n'; };
  }
}

GenerationResponse RemoteBackend::generate(const GenerationRequest& request) {
  request.validate();
  nlohmann::ordered_json body;
  body["prompt"] = request.prompt;
  body["max_new_tokens"] = request.max_new_tokens;
  body["stop"] = request.stop_sequences;
  body["temperature"] = request.temperature;

  const auto started = std::chrono::steady_clock::now();
  const auto outcome = post_json(endpoint_, "/v1/generate", body);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);

  if (!outcome.status) {
    if (outcome.timed_out) {
      throw Error(ErrorCode::kTimeout, "/v1/generate after " +
                                           std::to_string(endpoint_.timeout_ms) + " ms");
    }
    throw Error(ErrorCode::kRemoteError, "/v1/generate unreachable: " + outcome.transport_error);
  }
  if (*outcome.status < 200 || *outcome.status >= 300) {
    throw Error(ErrorCode::kRemoteError, "/v1/generate status " +
                                             std::to_string(*outcome.status) + ": " +
                                             outcome.body);
  }

  GenerationResponse response;
  try {
    const auto j = nlohmann::json::parse(outcome.body);
    response.text = j.at("text").get<std::string>();
    response.model_fingerprint = j.value("model_fingerprint", std::string{});
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kRemoteError, std::string("/v1/generate bad body: ") + e.what());
  }
  auto [text, cut] = truncate_at_stop(response.text, request.stop_sequences);
  if (cut) {
    warn_("StopNotApplied: /v1/generate returned text containing a stop sequence; truncated");
    response.text = std::move(text);
  }
  response.latency_ms = elapsed.count();
  return response;
}

// ---------------------------------------------------------------------------
// Mock

std::string_view to_string(MockMode mode) {
  switch (mode) {
    case MockMode::kEchoLastAnswer: return "echo_last";
    case MockMode::kFixed: return "fixed";
    case MockMode::kLookup: return "lookup";
    case MockMode::kProgressive: return "progressive";
  }
  return "unknown";
}

MockMode parse_mock_mode(std::string_view name) {
  for (auto mode : {MockMode::kEchoLastAnswer, MockMode::kFixed, MockMode::kLookup,
                    MockMode::kProgressive}) {
    if (to_string(mode) == name) return mode;
  }
  throw Error(ErrorCode::kConfigError, "unknown mock mode \"" + std::string(name) + "\"");
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  if (config_.exemplar_separator.empty() || config_.answer_label.empty()) {
    throw Error(ErrorCode::kConfigError, "mock needs a separator and an answer label");
  }
  if (config_.progressive_full_at < 1) {
    throw Error(ErrorCode::kConfigError, "progressive_full_at must be >= 1");
  }
}

namespace {

std::vector<std::string_view> split_blocks(std::string_view prompt, std::string_view separator) {
  std::vector<std::string_view> blocks;
  std::size_t pos = 0;
  for (;;) {
    const auto hit = prompt.find(separator, pos);
    if (hit == std::string_view::npos) {
      blocks.push_back(prompt.substr(pos));
      return blocks;
    }
    blocks.push_back(prompt.substr(pos, hit - pos));
    pos = hit + separator.size();
  }
}

std::string answer_of(std::string_view block, std::string_view answer_label) {
  const auto at = block.rfind(answer_label);
  if (at == std::string_view::npos) return {};
  auto answer = block.substr(at + answer_label.size());
  if (!answer.empty() && answer.front() == ' ') answer.remove_prefix(1);
  return std::string(answer);
}

std::string first_words(const std::string& text, std::size_t count) {
  std::string out;
  std::size_t taken = 0;
  std::size_t i = 0;
  while (taken < count && i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const auto j = std::min(text.find(' ', i), text.size());
    if (j > i) {
      if (!out.empty()) out += ' ';
      out.append(text, i, j - i);
      ++taken;
    }
    i = j;
  }
  return out;
}

std::size_t word_count(const std::string& text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (c == ' ') {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

}  // namespace

std::string MockBackend::respond(const std::string& prompt) const {
  const auto blocks = split_blocks(prompt, config_.exemplar_separator);
  // blocks[0] is the preamble, the last block is the query.
  const std::size_t shots = blocks.size() >= 2 ? blocks.size() - 2 : 0;
  const std::string_view query = blocks.back();

  auto echo_last = [&]() -> std::string {
    if (shots == 0) return config_.fixed_text;
    return answer_of(blocks[blocks.size() - 2], config_.answer_label);
  };
  auto lookup = [&]() -> std::string {
    // A key equal to the whole query block beats one merely contained in it.
    for (const auto& [sentinel, value] : config_.table) {
      if (query == sentinel) return value;
    }
    for (const auto& [sentinel, value] : config_.table) {
      if (!sentinel.empty() && query.find(sentinel) != std::string_view::npos) return value;
    }
    return config_.fallback_to_echo ? echo_last() : config_.fixed_text;
  };

  switch (config_.mode) {
    case MockMode::kEchoLastAnswer:
      return echo_last();
    case MockMode::kFixed:
      return config_.fixed_text;
    case MockMode::kLookup:
      return lookup();
    case MockMode::kProgressive: {
      const std::string target = lookup();
      const auto full = static_cast<std::size_t>(config_.progressive_full_at);
      const std::size_t k = std::min(shots, full);
      const std::size_t words = word_count(target);
      const auto reveal = static_cast<std::size_t>(
          std::ceil(static_cast<double>(words * (k + 1)) / static_cast<double>(full + 1)));
      return first_words(target, reveal);
    }
  }
  return {};
}

GenerationResponse MockBackend::generate(const GenerationRequest& request) {
  request.validate();
  GenerationResponse response;
  response.text = truncate_at_stop(respond(request.prompt), request.stop_sequences).first;
  response.model_fingerprint = "mock-" + std::string(to_string(config_.mode)) + "-v1";
  response.latency_ms = 0;
  return response;
}

// ---------------------------------------------------------------------------
// Batch

std::vector<BatchSlot> generate_batch(Backend& backend,
                                      const std::vector<GenerationRequest>& requests,
                                      int parallelism) {
  std::vector<BatchSlot> slots(requests.size());
  const auto n = static_cast<std::ptrdiff_t>(requests.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, parallelism)) \
    if (parallelism > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& slot = slots[static_cast<std::size_t>(i)];
    try {
      slot.response = backend.generate(requests[static_cast<std::size_t>(i)]);
    } catch (const Error& e) {
      slot.error = e;
    } catch (const std::exception& e) {
      slot.error = Error(ErrorCode::kBackendFailure, e.what());
    }
  }
  return slots;
}

}  // namespace ppvlm
