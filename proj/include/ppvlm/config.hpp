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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppvlm/backend.hpp"
#include "ppvlm/core_types.hpp"
#include "ppvlm/ingestion.hpp"
#include "ppvlm/metrics.hpp"
#include "ppvlm/prompting.hpp"
#include "ppvlm/selection.hpp"

namespace ppvlm {

enum class SelectionKind { kRandom, kGreedy, kZeroShot };

std::string_view to_string(SelectionKind kind);
SelectionKind parse_selection_kind(std::string_view name);

enum class CategoryMode { kCat, kAllMinusCat, kAll };

std::string_view to_string(CategoryMode mode);
CategoryMode parse_category_mode(std::string_view name);

struct BackendSettings {
  std::string kind = "mock";  // mock | remote
  // echo: lookup table from every manifest record's query block to its
  // reference summary. Other values name a MockMode.
  std::string mock = "echo";
  std::string mock_text;
  std::filesystem::path mock_table;  // JSON object sentinel -> response, for "lookup"
  bool mock_fallback_echo = false;
  int progressive_full_at = 5;
  AdapterEndpoint endpoint;
  int max_new_tokens = kDefaultMaxNewTokens;
};

// One experiment, loaded from a flat JSON object. Every key is listed in
// kSpecKeys; unknown keys are rejected.
struct ExperimentSpec {
  std::string name = "experiment";
  std::filesystem::path train_manifest;
  std::filesystem::path eval_manifest;
  ModalityMask mask = ModalityMask::parse("ALI");
  SelectionKind selection = SelectionKind::kRandom;
  SearchConfig search;
  int trials = 1;
  std::filesystem::path template_path;  // empty: default template
  PromptTemplate prompt_template;
  std::size_t context_budget = 0;
  BackendSettings backend;
  Metric transfer_metric = Metric::kMeteor;
  std::string category;  // empty: no category split
  CategoryMode train_category_mode = CategoryMode::kAll;
  double fps = 30.0;
  std::filesystem::path cache_dir = "cache";
};

extern const std::vector<std::string> kSpecKeys;

// `--set key=value`: value is parsed as JSON when it is valid JSON, else
// taken as a string. Unknown keys throw ConfigError.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Relative paths resolve against base_dir.
ExperimentSpec parse_spec(const nlohmann::json& config, const std::filesystem::path& base_dir);

// Reads the config file (or starts from an empty object when path is empty),
// applies overrides, parses.
ExperimentSpec load_spec(const std::filesystem::path& path,
                         const std::vector<std::string>& overrides);

// Canonical snapshot with every key and absolute paths; parse_spec of the
// snapshot reproduces the spec.
nlohmann::ordered_json spec_snapshot(const ExperimentSpec& spec);

// FNV-1a 64 of the snapshot text, hex.
std::string spec_fingerprint(const ExperimentSpec& spec);

}  // namespace ppvlm
