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

#include <optional>
#include <string>

#include <json.hpp>

#include "ppvlm/ingestion.hpp"

namespace ppvlm {

// Outcome of one JSON POST after retries. `status` is empty when no HTTP
// response was received at all.
struct HttpOutcome {
  std::optional<int> status;
  std::string body;
  bool timed_out = false;
  std::string transport_error;
};

// POSTs `body` to base_url + path. Transport failures and 5xx responses are
// retried up to max_retries times with exponential backoff starting at
// backoff_base_ms; 4xx responses are returned immediately.
HttpOutcome post_json(const AdapterEndpoint& endpoint, const std::string& path,
                      const nlohmann::ordered_json& body);

// Adapter wire protocol over HTTP: /v1/transcribe, /v1/caption, /v1/objects.
// Throws AdapterUnreachable when no response arrives and
// AdapterError(status, body) on a non-2xx reply.
class HttpAdapterClient : public AdapterClient {
 public:
  explicit HttpAdapterClient(AdapterEndpoint endpoint);

  AdapterText transcribe(const std::string& clip_id, const std::string& audio_uri) override;
  AdapterText caption(const std::string& clip_id, std::int64_t frame_index) override;
  AdapterNouns objects(const std::string& clip_id, std::int64_t frame_index) override;

 private:
  nlohmann::json call(const std::string& path, const nlohmann::ordered_json& body);

  AdapterEndpoint endpoint_;
};

}  // namespace ppvlm
