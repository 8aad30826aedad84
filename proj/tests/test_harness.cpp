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

#include <random>

#include "ppvlm/harness.hpp"
#include "ppvlm/ingestion.hpp"
#include "test_support.hpp"

using namespace ppvlm;
using namespace ppvlm::testing;

namespace {

// Normal equations of gain = a + b*u solved by Cramer's rule.
InverseCurve cramer_fit(const std::vector<std::pair<int, double>>& points) {
  double n = 0, su = 0, suu = 0, sg = 0, sug = 0;
  for (const auto& [shots, gain] : points) {
    const double u = 1.0 / shots;
    n += 1;
    su += u;
    suu += u * u;
    sg += gain;
    sug += u * gain;
  }
  const double det = n * suu - su * su;
  return {(sg * suu - su * sug) / det, (n * sug - su * sg) / det};
}

ExperimentSpec mini_spec(const std::string& file, std::vector<std::string> overrides = {}) {
  return load_spec(source_dir() / "configs" / file, overrides);
}

}  // namespace

TEST_CASE("category split partitions the manifest") {
  auto m = synthetic_manifest(10);
  for (int i : {1, 3, 6, 8}) m.records[static_cast<std::size_t>(i)].category = "Furniture";
  CHECK(category_split(m, "Furniture", CategoryMode::kCat).records.size() == 4);
  CHECK(category_split(m, "Furniture", CategoryMode::kAllMinusCat).records.size() == 6);
  CHECK(category_split(m, "Furniture", CategoryMode::kAll) == m);
  CHECK(error_code_of([&] { category_split(m, "Garden", CategoryMode::kCat); }) ==
        ErrorCode::kUnknownCategory);
  CHECK(category_split(m, "Garden", CategoryMode::kAllMinusCat).records.size() == 10);

  const auto big = synthetic_manifest(50, {"A", "B", "C"});
  for (const std::string c : {"A", "B", "C"}) {
    const auto in = category_split(big, c, CategoryMode::kCat);
    const auto out = category_split(big, c, CategoryMode::kAllMinusCat);
    CHECK(in.records.size() + out.records.size() == 50);
    for (const auto& r : in.records) CHECK(r.category == c);
    for (const auto& r : out.records) CHECK(r.category != c);
  }
}

TEST_CASE("relative gain and transfer delta") {
  CHECK(relative_gain(33.0, 30.0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(relative_gain(30.0, 30.0) == 0.0);
  CHECK(error_code_of([] { relative_gain(1.0, 0.0); }) == ErrorCode::kZeroBaseline);
  CHECK(transfer_delta(20.0, 15.0) == doctest::Approx(-25.0).epsilon(1e-12));
  CHECK(transfer_delta(7.5, 7.5) == 0.0);
  CHECK(error_code_of([] { transfer_delta(0.0, 1.0); }) == ErrorCode::kZeroNativeScore);
}

TEST_CASE("inverse curve fit") {
  std::vector<std::pair<int, double>> exact;
  for (int n = 1; n <= 8; ++n) exact.emplace_back(n, 2.0 + 3.0 / n);
  const auto c = fit_inverse_curve(exact);
  CHECK(c.a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(c.b == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(c.predict(4) == doctest::Approx(2.75).epsilon(1e-12));

  std::mt19937 gen(5);
  std::normal_distribution<double> noise(0.0, 0.4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<int, double>> points;
    for (int n : {1, 2, 3, 5, 8, 10, 10}) points.emplace_back(n, -1.0 + 6.0 / n + noise(gen));
    const auto got = fit_inverse_curve(points);
    const auto want = cramer_fit(points);
    CHECK(std::abs(got.a - want.a) < 1e-9);
    CHECK(std::abs(got.b - want.b) < 1e-9);
  }

  CHECK(error_code_of([] { fit_inverse_curve({{3, 1.0}, {3, 2.0}}); }) == ErrorCode::kDegeneratePoints);
  CHECK(error_code_of([] { fit_inverse_curve({{0, 1.0}, {3, 2.0}}); }) == ErrorCode::kDegeneratePoints);
}

TEST_CASE("state json round trip") {
  FewShotState s;
  s.provenance = Provenance::kGreedy;
  s.metric_name = "rouge_l";
  s.seed = 12;
  for (const auto& r : synthetic_manifest(3).records) s.exemplars.push_back(make_exemplar(r));
  CHECK(state_from_json(nlohmann::json::parse(state_to_json(s).dump())) == s);
  auto j = nlohmann::json::parse(state_to_json(s).dump());
  j["exemplars"][2]["source_clip_id"] = j["exemplars"][0]["source_clip_id"];
  CHECK(error_code_of([&] { state_from_json(j); }) == ErrorCode::kValidationFailed);
  j = nlohmann::json::parse(state_to_json(s).dump());
  j["provenance"] = "oracle";
  CHECK(error_code_of([&] { state_from_json(j); }) == ErrorCode::kConfigError);
}

TEST_CASE("echo backend reproduces every reference on the mini manifest") {
  const auto run = run_experiment(mini_spec("mini_greedy.json"));
  CHECK(run.report.corpus.at(Metric::kRougeL) == doctest::Approx(1.0));
  CHECK(run.report.corpus.at(Metric::kBleu2) == doctest::Approx(1.0));
  CHECK(run.report.rows.size() == 20);
  CHECK(run.states.front().exemplars.size() == 2);
  REQUIRE(run.trace.has_value());
  CHECK(run.trace->evaluations.size() == 8);
}

TEST_CASE("runs are deterministic and parallelism invariant") {
  const auto a = run_experiment(mini_spec("mini_random.json"));
  const auto b = run_experiment(mini_spec("mini_random.json"));
  const auto c = run_experiment(mini_spec("mini_random.json", {"parallelism=4"}));
  CHECK(serialize_summary(a.report) == serialize_summary(b.report));
  CHECK(serialize_rows(a.report) == serialize_rows(c.report));
  CHECK(serialize_summary(a.report) == serialize_summary(c.report));
  CHECK(a.report.trial_corpus.size() == 3);
}

TEST_CASE("persisted runs round-trip") {
  TempDir tmp;
  const auto run = run_experiment(mini_spec("mini_greedy.json"));
  const auto paths = persist_run(run, tmp.path());
  REQUIRE(paths.size() == 5);
  for (const auto& p : paths) CHECK(fs::exists(p));
  const auto summary = load_summary(paths[0]);
  CHECK(summary.experiment == "mini_greedy");
  CHECK(summary.exemplar_ids == run.report.exemplar_ids);
  for (Metric m : kAllMetrics) CHECK(summary.corpus.at(m) == run.report.corpus.at(m));
  CHECK(load_state(paths[3]) == run.states.front());
  const auto rows = read_file(paths[1]);
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 20);
  const auto snapshot = nlohmann::json::parse(read_file(paths[4]));
  CHECK(spec_fingerprint(parse_spec(snapshot, "/")) == summary.spec_fingerprint);
}

TEST_CASE("table has four metric columns in order, values x100") {
  ScoreReport r;
  r.experiment = "demo";
  r.mask = "ALI";
  r.selection = "greedy";
  r.corpus = {{Metric::kBleu2, 0.2062}, {Metric::kBleu3, 0.1038}, {Metric::kMeteor, 0.3741},
              {Metric::kRougeL, 1.0}};
  const auto table = render_table({r});
  const auto header = table.substr(0, table.find('\n'));
  CHECK(header.find("BLEU-2") < header.find("BLEU-3"));
  CHECK(header.find("BLEU-3") < header.find("METEOR"));
  CHECK(header.find("METEOR") < header.find("ROUGE-L"));
  CHECK(table.find("20.62") != std::string::npos);
  CHECK(table.find("10.38") != std::string::npos);
  CHECK(table.find("37.41") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
}

TEST_CASE("transferring a state onto its own experiment has zero delta") {
  const auto spec = mini_spec("mini_greedy.json");
  const auto native = run_experiment(spec);
  const auto t = transfer_evaluate(native.states.front(), spec, native.report, "mini");
  CHECK(t.delta_percent == 0.0);
  CHECK(t.target == "mini_manifest");
  CHECK(nlohmann::json::parse(serialize_transfer(t)).at("delta_percent") == 0.0);
}

TEST_CASE("evaluation failures name the clip") {
  class Broken : public Backend {
   public:
    GenerationResponse generate(const GenerationRequest&) override {
      throw Error(ErrorCode::kTimeout, "slow");
    }
  } broken;
  RunOptions options;
  options.backend = &broken;
  try {
    run_experiment(mini_spec("mini_random.json"), options);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBackendFailure);
    CHECK(std::string(e.what()).find("yc_001") != std::string::npos);
  }
}

TEST_CASE("zero-shot runs once with an empty state") {
  const auto run = run_experiment(mini_spec("mini_random.json", {"selection=zero_shot", "n_shots=0"}));
  CHECK(run.states.size() == 1);
  CHECK(run.states.front().exemplars.empty());
  CHECK(run.report.selection == "zero_shot");
}
