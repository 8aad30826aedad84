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

#include "ppvlm/adapter_client.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

namespace ppvlm {
namespace {

// Splits "http://host:port/prefix" into the client origin and a path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = base_url.find('/', host_start);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

}  // namespace

HttpOutcome post_json(const AdapterEndpoint& endpoint, const std::string& path,
                      const nlohmann::ordered_json& body) {
  const auto [origin, prefix] = split_base_url(endpoint.base_url);
  const std::string payload = body.dump();
  const auto timeout = std::chrono::milliseconds(endpoint.timeout_ms);

  HttpOutcome outcome;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(endpoint.backoff_base_ms) * (1 << (attempt - 1)));
    }
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(prefix + path, payload, "application/json");
    outcome = HttpOutcome{};
    if (!res) {
      const auto err = res.error();
      outcome.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      outcome.transport_error = httplib::to_string(err);
      continue;
    }
    outcome.status = res->status;
    outcome.body = res->body;
    if (res->status < 500) break;
  }
  return outcome;
}

HttpAdapterClient::HttpAdapterClient(AdapterEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {
  validate_endpoint(endpoint_);
}

nlohmann::json HttpAdapterClient::call(const std::string& path, const nlohmann::ordered_json& body) {
  const auto outcome = post_json(endpoint_, path, body);
  if (!outcome.status) {
    throw Error(ErrorCode::kAdapterUnreachable,
                endpoint_.base_url + path + ": " + outcome.transport_error);
  }
  if (*outcome.status < 200 || *outcome.status >= 300) {
    throw Error(ErrorCode::kAdapterError,
                path + " status " + std::to_string(*outcome.status) + ": " + outcome.body);
  }
  try {
    return nlohmann::json::parse(outcome.body);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kAdapterError, path + " returned invalid JSON: " + e.what());
  }
}

AdapterText HttpAdapterClient::transcribe(const std::string& clip_id,
                                          const std::string& audio_uri) {
  const auto j = call("/v1/transcribe", {{"clip_id", clip_id}, {"audio_uri", audio_uri}});
  try {
    return {j.at("text").get<std::string>(), j.value("model_fingerprint", std::string{})};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kAdapterError, std::string("/v1/transcribe: ") + e.what());
  }
}

AdapterText HttpAdapterClient::caption(const std::string& clip_id, std::int64_t frame_index) {
  const auto j = call("/v1/caption", {{"clip_id", clip_id}, {"frame_index", frame_index}});
  try {
    return {j.at("caption").get<std::string>(), j.value("model_fingerprint", std::string{})};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kAdapterError, std::string("/v1/caption: ") + e.what());
  }
}

AdapterNouns HttpAdapterClient::objects(const std::string& clip_id, std::int64_t frame_index) {
  const auto j = call("/v1/objects", {{"clip_id", clip_id}, {"frame_index", frame_index}});
  try {
    AdapterNouns out;
    out.model_fingerprint = j.value("model_fingerprint", std::string{});
    if (j.contains("nouns")) {
      out.nouns = j.at("nouns").get<std::vector<std::string>>();
    } else {
      // Adapters may return raw patch captions and leave chunking to us.
      out.nouns = extract_object_nouns(j.at("patch_captions").get<std::vector<std::string>>(),
                                       default_noun_stopwords());
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kAdapterError, std::string("/v1/objects: ") + e.what());
  }
}

}  // namespace ppvlm
