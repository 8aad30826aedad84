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

#include "ppvlm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace ppvlm {
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
}

ordered_json metrics_json(const MetricMap& values) {
  ordered_json j = ordered_json::object();
  for (Metric m : kAllMetrics) {
    if (auto it = values.find(m); it != values.end()) j[std::string(to_string(m))] = it->second;
  }
  return j;
}

MetricMap metrics_from_json(const nlohmann::json& j) {
  MetricMap out;
  for (const auto& [key, value] : j.items()) out[parse_metric(key)] = value.get<double>();
  return out;
}

ordered_json modalities_json(const ModalityTexts& m) {
  ordered_json j;
  j["audio_transcript"] = m.audio_transcript;
  j["video_label"] = m.video_label;
  j["image_caption"] = m.image_caption;
  j["object_nouns"] = m.object_nouns;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// Report serialization

std::string serialize_summary(const ScoreReport& report) {
  ordered_json j;
  j["experiment"] = report.experiment;
  j["spec_fingerprint"] = report.spec_fingerprint;
  j["mask"] = report.mask;
  j["selection"] = report.selection;
  j["exemplar_ids"] = report.exemplar_ids;
  j["corpus"] = metrics_json(report.corpus);
  ordered_json trials = ordered_json::array();
  for (const auto& t : report.trial_corpus) trials.push_back(metrics_json(t));
  j["trial_corpus"] = trials;
  std::size_t clips = 0;
  for (const auto& row : report.rows) clips += row.trial == 0 ? 1 : 0;
  j["clips"] = clips;
  return j.dump() + "\n";
}

std::string serialize_rows(const ScoreReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    ordered_json j;
    j["trial"] = row.trial;
    j["clip_id"] = row.clip_id;
    j["generated"] = row.generated;
    j["reference"] = row.reference;
    j["metrics"] = metrics_json(row.values);
    out += j.dump();
    out += '\n';
  }
  return out;
}

ScoreReport load_summary(const fs::path& path) {
  ScoreReport report;
  try {
    const auto j = nlohmann::json::parse(read_text(path));
    report.experiment = j.at("experiment").get<std::string>();
    report.spec_fingerprint = j.value("spec_fingerprint", std::string{});
    report.mask = j.value("mask", std::string{});
    report.selection = j.value("selection", std::string{});
    report.exemplar_ids = j.value("exemplar_ids", std::vector<std::string>{});
    report.corpus = metrics_from_json(j.at("corpus"));
    if (j.contains("trial_corpus")) {
      for (const auto& t : j.at("trial_corpus")) report.trial_corpus.push_back(metrics_from_json(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
  return report;
}

std::string render_table(const std::vector<ScoreReport>& reports) {
  std::size_t name_width = std::string("experiment").size();
  for (const auto& r : reports) name_width = std::max(name_width, r.experiment.size());

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "experiment" << "  "
      << std::setw(5) << "mask" << "  " << std::setw(9) << "selection";
  for (Metric m : kAllMetrics) out << "  " << std::right << std::setw(7) << display_name(m);
  out << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_width)) << r.experiment << "  "
        << std::setw(5) << r.mask << "  " << std::setw(9) << r.selection;
    for (Metric m : kAllMetrics) {
      out << "  " << std::right << std::setw(7);
      if (auto it = r.corpus.find(m); it != r.corpus.end()) {
        out << std::fixed << std::setprecision(2) << it->second * 100.0;
      } else {
        out << "-";
      }
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Few-shot state files

ordered_json state_to_json(const FewShotState& state) {
  ordered_json j;
  j["provenance"] = to_string(state.provenance);
  j["metric_name"] = state.metric_name;
  j["seed"] = state.seed;
  ordered_json exemplars = ordered_json::array();
  for (const auto& e : state.exemplars) {
    ordered_json ej;
    ej["source_clip_id"] = e.source_clip_id;
    ej["input"] = modalities_json(e.input);
    ej["output"] = e.output;
    exemplars.push_back(ej);
  }
  j["exemplars"] = exemplars;
  return j;
}

FewShotState state_from_json(const nlohmann::json& j) {
  FewShotState state;
  try {
    const auto provenance = j.at("provenance").get<std::string>();
    if (provenance != "random" && provenance != "greedy") {
      throw Error(ErrorCode::kConfigError, "unknown provenance \"" + provenance + "\"");
    }
    state.provenance = provenance == "greedy" ? Provenance::kGreedy : Provenance::kRandom;
    state.metric_name = j.value("metric_name", std::string{});
    state.seed = j.value("seed", std::uint64_t{0});
    for (const auto& ej : j.at("exemplars")) {
      Exemplar e;
      e.source_clip_id = ej.at("source_clip_id").get<std::string>();
      e.output = ej.at("output").get<std::string>();
      const auto& in = ej.at("input");
      e.input.audio_transcript = in.value("audio_transcript", std::string{});
      e.input.video_label = in.value("video_label", std::string{});
      e.input.image_caption = in.value("image_caption", std::string{});
      e.input.object_nouns = in.value("object_nouns", std::vector<std::string>{});
      if (e.output.empty()) {
        throw Error(ErrorCode::kValidationFailed, "exemplar \"" + e.source_clip_id +
                                                      "\" has an empty output");
      }
      state.exemplars.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("few-shot state: ") + e.what());
  }
  require_distinct_sources(state);
  return state;
}

FewShotState load_state(const fs::path& path) {
  try {
    return state_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kConfigError, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Derived quantities

Manifest category_split(const Manifest& manifest, const std::string& category,
                        CategoryMode mode) {
  if (mode == CategoryMode::kAll) return manifest;
  const bool present = std::any_of(manifest.records.begin(), manifest.records.end(),
                                   [&](const ClipRecord& r) { return r.category == category; });
  if (mode == CategoryMode::kCat && !present) {
    throw Error(ErrorCode::kUnknownCategory, "no record has category \"" + category + "\"");
  }
  Manifest out;
  out.dataset_name = manifest.dataset_name;
  out.split = manifest.split;
  const bool keep_match = mode == CategoryMode::kCat;
  for (const auto& r : manifest.records) {
    if ((r.category == category) == keep_match) out.records.push_back(r);
  }
  return out;
}

double relative_gain(double search_score, double random_score) {
  if (!(random_score > 0.0)) {
    throw Error(ErrorCode::kZeroBaseline, "random baseline must be positive");
  }
  return 100.0 * (search_score - random_score) / random_score;
}

InverseCurve fit_inverse_curve(const std::vector<std::pair<int, double>>& points) {
  for (const auto& [n, gain] : points) {
    if (n <= 0) throw Error(ErrorCode::kDegeneratePoints, "shot counts must be positive");
  }
  std::set<int> distinct;
  for (const auto& p : points) distinct.insert(p.first);
  if (distinct.size() < 2) {
    throw Error(ErrorCode::kDegeneratePoints, "need at least two distinct shot counts");
  }

  const double count = static_cast<double>(points.size());
  double mean_u = 0.0, mean_g = 0.0;
  for (const auto& [n, gain] : points) {
    mean_u += 1.0 / n;
    mean_g += gain;
  }
  mean_u /= count;
  mean_g /= count;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, gain] : points) {
    const double du = 1.0 / n - mean_u;
    sxx += du * du;
    sxy += du * (gain - mean_g);
  }
  InverseCurve curve;
  curve.b = sxy / sxx;
  curve.a = mean_g - curve.b * mean_u;
  return curve;
}

double transfer_delta(double native, double transferred) {
  if (!(native > 0.0)) throw Error(ErrorCode::kZeroNativeScore, "native score must be positive");
  return 100.0 * (transferred - native) / native;
}

std::string serialize_transfer(const TransferReport& report) {
  ordered_json j;
  j["source"] = report.source;
  j["target"] = report.target;
  j["metric"] = to_string(report.metric);
  j["native"] = report.native;
  j["transferred"] = report.transferred;
  j["delta_percent"] = report.delta_percent;
  return j.dump() + "\n";
}

// ---------------------------------------------------------------------------
// Running experiments

std::unique_ptr<Backend> make_backend(const ExperimentSpec& spec, const Manifest& train,
                                      const Manifest& eval) {
  const auto& b = spec.backend;
  if (b.kind == "remote") return std::make_unique<RemoteBackend>(resolve_endpoint(b.endpoint));

  MockConfig mock;
  mock.fixed_text = b.mock_text;
  mock.fallback_to_echo = b.mock_fallback_echo;
  mock.progressive_full_at = b.progressive_full_at;
  mock.exemplar_separator = spec.prompt_template.exemplar_separator;
  mock.answer_label = spec.prompt_template.answer_label;

  auto add_query_blocks = [&](const Manifest& m) {
    for (const auto& r : m.records) {
      mock.table.emplace_back(render_block(r.modalities, spec.mask, spec.prompt_template,
                                           std::nullopt),
                              r.reference_summary);
    }
  };

  if (b.mock == "echo") {
    mock.mode = MockMode::kLookup;
    add_query_blocks(eval);
    add_query_blocks(train);
  } else {
    mock.mode = parse_mock_mode(b.mock);
    if (mock.mode == MockMode::kLookup) {
      if (b.mock_table.empty()) {
        throw Error(ErrorCode::kConfigError, "mock=lookup needs mock_table");
      }
      try {
        const auto table = nlohmann::ordered_json::parse(read_text(b.mock_table));
        for (const auto& [key, value] : table.items()) {
          mock.table.emplace_back(key, value.get<std::string>());
        }
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfigError, b.mock_table.string() + ": " + e.what());
      }
    } else if (mock.mode == MockMode::kProgressive) {
      add_query_blocks(eval);
      add_query_blocks(train);
    }
  }
  return std::make_unique<MockBackend>(std::move(mock));
}

ExperimentData load_experiment_data(const ExperimentSpec& spec) {
  if (spec.train_manifest.empty() && spec.selection != SelectionKind::kZeroShot) {
    throw Error(ErrorCode::kConfigError, "train_manifest is required");
  }
  if (spec.eval_manifest.empty()) throw Error(ErrorCode::kConfigError, "eval_manifest is required");
  ExperimentData data;
  if (!spec.train_manifest.empty()) data.train = load_manifest(spec.train_manifest, Split::kTrain);
  data.eval = load_manifest(spec.eval_manifest, Split::kTest);
  if (!spec.category.empty()) {
    data.train = category_split(data.train, spec.category, spec.train_category_mode);
    data.eval = category_split(data.eval, spec.category, CategoryMode::kCat);
  }
  return data;
}

std::vector<ClipRow> evaluate_state(const FewShotState& state, const Manifest& eval,
                                    const GenerationContext& context, int parallelism,
                                    int trial) {
  std::vector<const ClipRecord*> clips;
  for (const auto& r : eval.records) clips.push_back(&r);
  std::sort(clips.begin(), clips.end(),
            [](const ClipRecord* a, const ClipRecord* b) { return a->clip_id < b->clip_id; });

  std::vector<GenerationRequest> requests;
  requests.reserve(clips.size());
  for (const auto* c : clips) requests.push_back(context.request_for(state, c->modalities));
  const auto slots = generate_batch(*context.backend, requests, parallelism);

  std::vector<ClipRow> rows;
  rows.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (!slots[i].ok()) {
      throw Error(ErrorCode::kBackendFailure,
                  "clip \"" + clips[i]->clip_id + "\": " + slots[i].error->what());
    }
    ClipRow row;
    row.trial = trial;
    row.clip_id = clips[i]->clip_id;
    row.generated = slots[i].response->text;
    row.reference = clips[i]->reference_summary;
    const auto cand = tokenize(row.generated);
    const auto ref = tokenize(row.reference);
    row.values[Metric::kBleu2] = sentence_bleu_smoothed(cand, ref, 2);
    row.values[Metric::kBleu3] = sentence_bleu_smoothed(cand, ref, 3);
    row.values[Metric::kMeteor] = meteor(cand, ref).value;
    row.values[Metric::kRougeL] = rouge_l(cand, ref).value;
    rows.push_back(std::move(row));
  }
  return rows;
}

MetricMap corpus_metrics(const std::vector<ClipRow>& rows) {
  std::vector<TextPair> pairs;
  pairs.reserve(rows.size());
  for (const auto& row : rows) pairs.emplace_back(row.generated, row.reference);
  MetricMap out;
  for (Metric m : kAllMetrics) {
    if (m == Metric::kBleu2 || m == Metric::kBleu3) {
      out[m] = corpus_score(pairs, m).value;
    } else {
      // Macro average straight from the rows, so the corpus value is
      // reproducible from the persisted per-clip values.
      if (rows.empty()) throw Error(ErrorCode::kEmptyCorpus, "no clips evaluated");
      double sum = 0.0;
      for (const auto& row : rows) sum += row.values.at(m);
      out[m] = sum / static_cast<double>(rows.size());
    }
  }
  return out;
}

namespace {

GenerationContext context_for(const ExperimentSpec& spec, Backend& backend) {
  GenerationContext context;
  context.backend = &backend;
  context.mask = spec.mask;
  context.prompt_template = spec.prompt_template;
  context.max_new_tokens = spec.backend.max_new_tokens;
  context.context_budget = spec.context_budget;
  return context;
}

}  // namespace

ExperimentRun run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  const auto data = load_experiment_data(spec);
  if (data.eval.records.empty()) {
    throw Error(ErrorCode::kEmptyCorpus, "eval manifest has no records");
  }

  std::unique_ptr<Backend> owned;
  Backend* backend = options.backend;
  if (backend == nullptr) {
    owned = make_backend(spec, data.train, data.eval);
    backend = owned.get();
  }
  const auto context = context_for(spec, *backend);

  std::vector<Exemplar> pool;
  pool.reserve(data.train.records.size());
  for (const auto& r : data.train.records) pool.push_back(make_exemplar(r));

  ExperimentRun run;
  run.spec = spec;
  run.report.experiment = spec.name;
  run.report.spec_fingerprint = spec_fingerprint(spec);
  run.report.mask = spec.mask.to_string();
  run.report.selection = options.fixed_state ? "fixed" : std::string(to_string(spec.selection));

  const int trials = spec.selection == SelectionKind::kZeroShot ? 1 : spec.trials;
  for (int t = 0; t < trials; ++t) {
    FewShotState state;
    if (options.fixed_state) {
      state = *options.fixed_state;
    } else {
      SearchConfig search = spec.search;
      search.seed = spec.search.seed + static_cast<std::uint64_t>(t);
      switch (spec.selection) {
        case SelectionKind::kZeroShot:
          state.seed = search.seed;
          break;
        case SelectionKind::kRandom:
          state = sample_random_fewshot(pool, static_cast<std::size_t>(search.n_shots),
                                        search.seed);
          break;
        case SelectionKind::kGreedy: {
          auto result = greedy_fewshot_search(pool, search, context);
          state = std::move(result.state);
          if (t == 0) run.trace = std::move(result.trace);
          break;
        }
      }
    }
    auto rows = evaluate_state(state, data.eval, context, spec.search.parallelism, t);
    run.report.trial_corpus.push_back(corpus_metrics(rows));
    for (auto& row : rows) run.report.rows.push_back(std::move(row));
    run.states.push_back(std::move(state));
  }

  for (Metric m : kAllMetrics) {
    double sum = 0.0;
    for (const auto& tc : run.report.trial_corpus) sum += tc.at(m);
    run.report.corpus[m] = sum / static_cast<double>(run.report.trial_corpus.size());
  }
  run.report.exemplar_ids = run.states.front().exemplar_ids();
  return run;
}

std::vector<fs::path> persist_run(const ExperimentRun& run, const fs::path& out_dir) {
  const fs::path dir = out_dir / run.spec.name;
  fs::create_directories(dir);
  const std::vector<fs::path> paths = {dir / "report.summary", dir / "report.rows",
                                       dir / "trace.rows", dir / "fewshot.state",
                                       dir / "spec.snapshot"};
  write_text(paths[0], serialize_summary(run.report));
  write_text(paths[1], serialize_rows(run.report));
  write_text(paths[2], run.trace ? serialize_trace(*run.trace) : std::string{});
  write_text(paths[3], state_to_json(run.states.front()).dump(2) + "\n");
  write_text(paths[4], spec_snapshot(run.spec).dump(2) + "\n");
  return paths;
}

TransferReport transfer_evaluate(const FewShotState& source_state,
                                 const ExperimentSpec& target_spec,
                                 const ScoreReport& native_report,
                                 const std::string& source_name, Backend* backend) {
  const Metric metric = target_spec.transfer_metric;
  const auto native_it = native_report.corpus.find(metric);
  if (native_it == native_report.corpus.end()) {
    throw Error(ErrorCode::kConfigError, "native report lacks " + std::string(to_string(metric)));
  }
  const double native = native_it->second;
  if (!(native > 0.0)) throw Error(ErrorCode::kZeroNativeScore, "native score is zero");

  RunOptions options;
  options.backend = backend;
  options.fixed_state = source_state;
  ExperimentSpec spec = target_spec;
  spec.trials = 1;
  const auto run = run_experiment(spec, options);

  TransferReport report;
  report.source = source_name;
  report.target = load_manifest(target_spec.eval_manifest, Split::kTest).dataset_name;
  report.metric = metric;
  report.native = native;
  report.transferred = run.report.corpus.at(metric);
  report.delta_percent = transfer_delta(report.native, report.transferred);
  return report;
}

}  // namespace ppvlm
