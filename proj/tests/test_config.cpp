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

#include "ppvlm/config.hpp"
#include "test_support.hpp"

using namespace ppvlm;
using namespace ppvlm::testing;

TEST_CASE("defaults") {
  const auto spec = parse_spec(nlohmann::json::object(), "/tmp");
  CHECK(spec.selection == SelectionKind::kRandom);
  CHECK(spec.search.n_shots == 5);
  CHECK(spec.search.holdout_size == 30);
  CHECK(spec.search.search_size == 30);
  CHECK(spec.search.metric == Metric::kMeteor);
  CHECK(spec.mask == ModalityMask::parse("ALI"));
  CHECK(spec.backend.kind == "mock");
  CHECK(spec.trials == 1);
  CHECK(spec.cache_dir == fs::path("/tmp/cache"));
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK(error_code_of([] { parse_spec({{"shots", 3}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec({{"n_shots", "five"}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec({{"selection", "bandit"}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec({{"backend", "gpu"}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec({{"mask", "AXL"}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec({{"metric", "cider"}}, "/tmp"); }) == ErrorCode::kUnknownMetric);
  CHECK(error_code_of([] { parse_spec({{"name", "a/b"}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec({{"trials", 0}}, "/tmp"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([] { parse_spec(nlohmann::json::array(), "/tmp"); }) == ErrorCode::kConfigError);
}

TEST_CASE("zero_shot implies zero shots") {
  CHECK(parse_spec({{"selection", "zero_shot"}}, "/tmp").search.n_shots == 0);
  CHECK(error_code_of([] { parse_spec({{"selection", "zero_shot"}, {"n_shots", 2}}, "/tmp"); }) ==
        ErrorCode::kConfigError);
}

TEST_CASE("overrides parse JSON values or fall back to strings") {
  nlohmann::json c = nlohmann::json::object();
  apply_override(c, "n_shots=3");
  apply_override(c, "name=run one");
  apply_override(c, "mock_fallback_echo=true");
  CHECK(c.at("n_shots") == 3);
  CHECK(c.at("name") == "run one");
  CHECK(c.at("mock_fallback_echo") == true);
  CHECK(error_code_of([&] { apply_override(c, "nonsense"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([&] { apply_override(c, "=3"); }) == ErrorCode::kConfigError);
  CHECK(error_code_of([&] { apply_override(c, "shots=3"); }) == ErrorCode::kConfigError);
}

TEST_CASE("load_spec resolves paths against the config file") {
  const auto spec = load_spec(source_dir() / "configs" / "mini_greedy.json", {"seed=11"});
  CHECK(spec.train_manifest == fs::weakly_canonical(mini_manifest_path()));
  CHECK(spec.selection == SelectionKind::kGreedy);
  CHECK(spec.search.seed == 11);
  CHECK(error_code_of([] { load_spec("/nonexistent/x.json", {}); }) == ErrorCode::kFileNotFound);
}

TEST_CASE("snapshot round-trips through parse_spec") {
  const auto spec = load_spec(source_dir() / "configs" / "mini_random.json", {"parallelism=3"});
  const auto snapshot = spec_snapshot(spec);
  const auto again = parse_spec(nlohmann::json::parse(snapshot.dump()), "/");
  CHECK(spec_snapshot(again).dump() == snapshot.dump());
  for (const auto& key : kSpecKeys) CHECK(snapshot.contains(key));
}

TEST_CASE("fingerprint ignores parallelism only") {
  const auto base = load_spec(source_dir() / "configs" / "mini_greedy.json", {});
  const auto p4 = load_spec(source_dir() / "configs" / "mini_greedy.json", {"parallelism=4"});
  const auto other = load_spec(source_dir() / "configs" / "mini_greedy.json", {"seed=8"});
  CHECK(spec_fingerprint(base) == spec_fingerprint(p4));
  CHECK(spec_fingerprint(base) != spec_fingerprint(other));
  CHECK(spec_fingerprint(base).size() == 16);
}
