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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppvlm/backend.hpp"
#include "ppvlm/config.hpp"
#include "ppvlm/ingestion.hpp"
#include "ppvlm/metrics.hpp"
#include "ppvlm/selection.hpp"

namespace ppvlm {

using MetricMap = std::map<Metric, double>;

struct ClipRow {
  int trial = 0;
  std::string clip_id;
  std::string generated;
  std::string reference;
  MetricMap values;  // BLEU columns use the smoothed per-sentence variant
};

struct ScoreReport {
  std::string experiment;
  std::string spec_fingerprint;
  std::string mask;
  std::string selection;
  std::vector<std::string> exemplar_ids;  // trial 0
  std::vector<MetricMap> trial_corpus;
  MetricMap corpus;  // mean of trial_corpus
  std::vector<ClipRow> rows;  // sorted by (trial, clip_id)
};

// Single-line summary record and one line per clip row.
std::string serialize_summary(const ScoreReport& report);
std::string serialize_rows(const ScoreReport& report);
ScoreReport load_summary(const std::filesystem::path& path);

// Aligned table: one line per report, columns BLEU-2, BLEU-3, METEOR,
// ROUGE-L, values x100 with two decimals.
std::string render_table(const std::vector<ScoreReport>& reports);

nlohmann::ordered_json state_to_json(const FewShotState& state);
FewShotState state_from_json(const nlohmann::json& j);
FewShotState load_state(const std::filesystem::path& path);

// Manifest subsets for category experiments. Cat keeps the category,
// AllMinusCat its complement, All everything. Throws UnknownCategory when a
// Cat split names a category that no record has.
Manifest category_split(const Manifest& manifest, const std::string& category,
                        CategoryMode mode);

// 100 * (search - random) / random. Throws ZeroBaseline.
double relative_gain(double search_score, double random_score);

struct InverseCurve {
  double a = 0.0;
  double b = 0.0;
  double predict(double n) const { return a + b / n; }
};

// Least squares fit of gain = a + b / n via u = 1 / n. Needs two distinct n,
// otherwise throws DegeneratePoints.
InverseCurve fit_inverse_curve(const std::vector<std::pair<int, double>>& points);

struct TransferReport {
  std::string source;
  std::string target;
  Metric metric = Metric::kMeteor;
  double native = 0.0;
  double transferred = 0.0;
  double delta_percent = 0.0;
};

// 100 * (transferred - native) / native. Throws ZeroNativeScore.
double transfer_delta(double native, double transferred);
std::string serialize_transfer(const TransferReport& report);

// Builds the backend an experiment asks for. The "echo" mock maps each
// record's rendered query block (train and eval) to its reference summary.
std::unique_ptr<Backend> make_backend(const ExperimentSpec& spec, const Manifest& train,
                                      const Manifest& eval);

struct ExperimentData {
  Manifest train;  // after the category split
  Manifest eval;
};

// Loads both manifests and applies the spec's category handling.
ExperimentData load_experiment_data(const ExperimentSpec& spec);

struct ExperimentRun {
  ExperimentSpec spec;
  ScoreReport report;
  std::vector<FewShotState> states;     // one per trial
  std::optional<SearchTrace> trace;     // greedy, trial 0
};

struct RunOptions {
  // Overrides the spec's backend (tests inject counting or failing mocks).
  Backend* backend = nullptr;
  // Skip selection and use this state for every trial.
  std::optional<FewShotState> fixed_state;
};

// Selection on the train manifest, then generation and scoring of every
// eval clip, for each trial.
ExperimentRun run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

// Generates and scores every clip of `eval` with one few-shot state.
std::vector<ClipRow> evaluate_state(const FewShotState& state, const Manifest& eval,
                                    const GenerationContext& context, int parallelism,
                                    int trial);
// Corpus aggregate of rows from a single trial.
MetricMap corpus_metrics(const std::vector<ClipRow>& rows);

// Writes report.summary, report.rows, trace.rows, fewshot.state and
// spec.snapshot under out_dir/<name>/ and returns the file paths.
std::vector<std::filesystem::path> persist_run(const ExperimentRun& run,
                                               const std::filesystem::path& out_dir);

// Evaluates `source_state` on the target experiment's eval set and compares
// with the native report on the target's transfer metric.
TransferReport transfer_evaluate(const FewShotState& source_state,
                                 const ExperimentSpec& target_spec,
                                 const ScoreReport& native_report,
                                 const std::string& source_name,
                                 Backend* backend = nullptr);

}  // namespace ppvlm
