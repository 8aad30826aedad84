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

#include "ppvlm/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ppvlm {
namespace fs = std::filesystem;

std::string_view to_string(SelectionKind kind) {
  switch (kind) {
    case SelectionKind::kRandom: return "random";
    case SelectionKind::kGreedy: return "greedy";
    case SelectionKind::kZeroShot: return "zero_shot";
  }
  return "random";
}

SelectionKind parse_selection_kind(std::string_view name) {
  if (name == "random") return SelectionKind::kRandom;
  if (name == "greedy") return SelectionKind::kGreedy;
  if (name == "zero_shot") return SelectionKind::kZeroShot;
  throw Error(ErrorCode::kConfigError, "unknown selection \"" + std::string(name) + "\"");
}

std::string_view to_string(CategoryMode mode) {
  switch (mode) {
    case CategoryMode::kCat: return "Cat";
    case CategoryMode::kAllMinusCat: return "AllMinusCat";
    case CategoryMode::kAll: return "All";
  }
  return "All";
}

CategoryMode parse_category_mode(std::string_view name) {
  if (name == "Cat") return CategoryMode::kCat;
  if (name == "AllMinusCat") return CategoryMode::kAllMinusCat;
  if (name == "All") return CategoryMode::kAll;
  throw Error(ErrorCode::kConfigError, "unknown category mode \"" + std::string(name) + "\"");
}

const std::vector<std::string> kSpecKeys = {
    "name",          "train_manifest",   "eval_manifest",       "mask",
    "selection",     "n_shots",          "holdout_size",        "search_size",
    "metric",        "seed",             "parallelism",         "trials",
    "template",      "context_budget",   "backend",             "mock",
    "mock_text",     "mock_table",       "mock_fallback_echo",  "progressive_full_at",
    "adapter_url",   "timeout_ms",       "max_retries",         "max_new_tokens",
    "transfer_metric", "category",       "train_category_mode", "fps",
    "cache_dir",
};

namespace {

bool known_key(const std::string& key) {
  return std::find(kSpecKeys.begin(), kSpecKeys.end(), key) != kSpecKeys.end();
}

fs::path resolve(const fs::path& base_dir, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  if (p.is_relative()) p = base_dir / p;
  return fs::weakly_canonical(p);
}

}  // namespace

void apply_override(nlohmann::json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kConfigError, "override \"" + assignment + "\" is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  if (!known_key(key)) throw Error(ErrorCode::kConfigError, "unknown config key \"" + key + "\"");
  auto parsed = nlohmann::json::parse(value, nullptr, /*allow_exceptions=*/false);
  config[key] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
}

ExperimentSpec parse_spec(const nlohmann::json& config, const fs::path& base_dir) {
  if (!config.is_object()) throw Error(ErrorCode::kConfigError, "config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (!known_key(key)) throw Error(ErrorCode::kConfigError, "unknown config key \"" + key + "\"");
  }

  ExperimentSpec spec;
  try {
    auto str = [&](const char* key, const std::string& fallback) {
      return config.contains(key) ? config.at(key).get<std::string>() : fallback;
    };
    auto integer = [&](const char* key, long long fallback) {
      return config.contains(key) ? config.at(key).get<long long>() : fallback;
    };

    spec.name = str("name", spec.name);
    if (spec.name.empty() || spec.name.find('/') != std::string::npos) {
      throw Error(ErrorCode::kConfigError, "name must be non-empty and contain no '/'");
    }
    spec.train_manifest = resolve(base_dir, str("train_manifest", ""));
    spec.eval_manifest = resolve(base_dir, str("eval_manifest", ""));
    spec.mask = ModalityMask::parse(str("mask", "ALI"));
    spec.selection = parse_selection_kind(str("selection", "random"));

    const long long default_shots = spec.selection == SelectionKind::kZeroShot ? 0 : 5;
    spec.search.n_shots = static_cast<int>(integer("n_shots", default_shots));
    spec.search.holdout_size = static_cast<int>(integer("holdout_size", 30));
    spec.search.search_size = static_cast<int>(integer("search_size", 30));
    spec.search.metric = parse_metric(str("metric", "meteor"));
    spec.search.seed = config.contains("seed") ? config.at("seed").get<std::uint64_t>() : 0;
    spec.search.parallelism = static_cast<int>(integer("parallelism", 1));
    spec.search.validate();
    if (spec.selection == SelectionKind::kZeroShot && spec.search.n_shots != 0) {
      throw Error(ErrorCode::kConfigError, "zero_shot selection requires n_shots = 0");
    }

    spec.trials = static_cast<int>(integer("trials", 1));
    if (spec.trials < 1) throw Error(ErrorCode::kConfigError, "trials must be >= 1");

    spec.template_path = resolve(base_dir, str("template", ""));
    if (!spec.template_path.empty()) spec.prompt_template = load_template(spec.template_path);
    const long long budget = integer("context_budget", 0);
    if (budget < 0) throw Error(ErrorCode::kConfigError, "context_budget must be >= 0");
    spec.context_budget = static_cast<std::size_t>(budget);

    auto& b = spec.backend;
    b.kind = str("backend", b.kind);
    if (b.kind != "mock" && b.kind != "remote") {
      throw Error(ErrorCode::kConfigError, "backend must be mock or remote");
    }
    b.mock = str("mock", b.mock);
    if (b.mock != "echo") parse_mock_mode(b.mock);
    b.mock_text = str("mock_text", "");
    b.mock_table = resolve(base_dir, str("mock_table", ""));
    b.mock_fallback_echo = config.value("mock_fallback_echo", false);
    b.progressive_full_at = static_cast<int>(integer("progressive_full_at", 5));
    b.endpoint.base_url = str("adapter_url", b.endpoint.base_url);
    b.endpoint.timeout_ms = static_cast<int>(integer("timeout_ms", 120000));
    b.endpoint.max_retries = static_cast<int>(integer("max_retries", 2));
    b.max_new_tokens = static_cast<int>(integer("max_new_tokens", kDefaultMaxNewTokens));
    if (b.endpoint.timeout_ms <= 0) throw Error(ErrorCode::kConfigError, "timeout_ms must be > 0");
    if (b.endpoint.max_retries < 0) throw Error(ErrorCode::kConfigError, "max_retries must be >= 0");
    if (b.max_new_tokens < 1) throw Error(ErrorCode::kConfigError, "max_new_tokens must be >= 1");

    spec.transfer_metric = parse_metric(str("transfer_metric", "meteor"));
    spec.category = str("category", "");
    spec.train_category_mode = parse_category_mode(str("train_category_mode", "All"));
    spec.fps = config.contains("fps") ? config.at("fps").get<double>() : 30.0;
    if (!(spec.fps > 0.0)) throw Error(ErrorCode::kConfigError, "fps must be > 0");
    spec.cache_dir = resolve(base_dir, str("cache_dir", "cache"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  return spec;
}

ExperimentSpec load_spec(const fs::path& path, const std::vector<std::string>& overrides) {
  nlohmann::json config = nlohmann::json::object();
  fs::path base_dir = fs::current_path();
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
      config = nlohmann::json::parse(buffer.str());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
    }
    base_dir = fs::absolute(path).parent_path();
  }
  for (const auto& o : overrides) apply_override(config, o);
  return parse_spec(config, base_dir);
}

nlohmann::ordered_json spec_snapshot(const ExperimentSpec& spec) {
  nlohmann::ordered_json j;
  j["name"] = spec.name;
  j["train_manifest"] = spec.train_manifest.string();
  j["eval_manifest"] = spec.eval_manifest.string();
  j["mask"] = spec.mask.to_string();
  j["selection"] = to_string(spec.selection);
  j["n_shots"] = spec.search.n_shots;
  j["holdout_size"] = spec.search.holdout_size;
  j["search_size"] = spec.search.search_size;
  j["metric"] = to_string(spec.search.metric);
  j["seed"] = spec.search.seed;
  j["parallelism"] = spec.search.parallelism;
  j["trials"] = spec.trials;
  j["template"] = spec.template_path.string();
  j["context_budget"] = spec.context_budget;
  j["backend"] = spec.backend.kind;
  j["mock"] = spec.backend.mock;
  j["mock_text"] = spec.backend.mock_text;
  j["mock_table"] = spec.backend.mock_table.string();
  j["mock_fallback_echo"] = spec.backend.mock_fallback_echo;
  j["progressive_full_at"] = spec.backend.progressive_full_at;
  j["adapter_url"] = spec.backend.endpoint.base_url;
  j["timeout_ms"] = spec.backend.endpoint.timeout_ms;
  j["max_retries"] = spec.backend.endpoint.max_retries;
  j["max_new_tokens"] = spec.backend.max_new_tokens;
  j["transfer_metric"] = to_string(spec.transfer_metric);
  j["category"] = spec.category;
  j["train_category_mode"] = to_string(spec.train_category_mode);
  j["fps"] = spec.fps;
  j["cache_dir"] = spec.cache_dir.string();
  return j;
}

std::string spec_fingerprint(const ExperimentSpec& spec) {
  auto snapshot = spec_snapshot(spec);
  // Parallelism never changes results, so it stays out of the fingerprint.
  snapshot.erase("parallelism");
  const std::string text = snapshot.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ppvlm
