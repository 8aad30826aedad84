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

#include "ppvlm/cli.hpp"

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppvlm/adapter_client.hpp"
#include "ppvlm/config.hpp"
#include "ppvlm/harness.hpp"
#include "ppvlm/ingestion.hpp"

namespace ppvlm {
namespace fs = std::filesystem;

namespace {

struct GlobalOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  int verbose = 0;
  bool quiet = false;
};

class Diagnostics {
 public:
  Diagnostics(std::ostream& err, const GlobalOptions& g) : err_(err), g_(g) {}

  std::ostream& info() { return g_.quiet ? null_ : err_; }
  std::ostream& debug() { return g_.verbose > 0 && !g_.quiet ? err_ : null_; }

 private:
  std::ostream& err_;
  const GlobalOptions& g_;
  std::ostringstream null_;
};

ExperimentSpec spec_from(const GlobalOptions& g) {
  auto overrides = g.overrides;
  if (g.seed) overrides.push_back("seed=" + std::to_string(*g.seed));
  return load_spec(g.config, overrides);
}

std::string format_fixed(double value, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << value;
  return s.str();
}

// --------------------------------------------------------------------------

struct HydrateArgs {
  std::string manifest;
  std::string adapter_url;
  std::string cache_dir;
  std::string mask = "ALIO";
  std::string split = "train";
  std::string fingerprint;
  double fps = 0.0;
  int parallelism = 4;
};

int cmd_hydrate(const GlobalOptions& g, const HydrateArgs& a, std::ostream& out,
                Diagnostics& diag) {
  // Config file values are defaults; explicit flags win.
  ExperimentSpec spec = spec_from(g);
  AdapterEndpoint endpoint = resolve_endpoint(spec.backend.endpoint);
  if (!a.adapter_url.empty()) endpoint.base_url = a.adapter_url;

  const auto manifest = load_manifest(a.manifest, parse_split(a.split));
  HydrateOptions options;
  options.wanted = ModalityMask::parse(a.mask);
  options.fps = a.fps > 0.0 ? a.fps : spec.fps;
  options.parallelism = a.parallelism;
  if (!a.fingerprint.empty()) options.pinned_fingerprint = a.fingerprint;
  ModalityCache cache(a.cache_dir.empty() ? spec.cache_dir : fs::path(a.cache_dir));

  if (g.dry_run) {
    std::size_t misses = 0;
    for (const auto& r : manifest.records) {
      const auto& m = r.modalities;
      const auto miss = [&](ModalityKind kind) {
        return !cache.lookup(r.clip_id, kind, options.pinned_fingerprint).has_value();
      };
      if (options.wanted.audio() && m.audio_transcript.empty() && miss(ModalityKind::kAudio)) ++misses;
      if (options.wanted.image() && m.image_caption.empty() && miss(ModalityKind::kImage)) ++misses;
      if (options.wanted.objects() && m.object_nouns.empty() && miss(ModalityKind::kObjects)) ++misses;
    }
    diag.info() << "dry run: " << manifest.records.size() << " clips, " << misses
                << " adapter calls needed\n";
    return kExitOk;
  }

  HttpAdapterClient client(endpoint);
  const auto result = hydrate_modalities(manifest, client, cache, options);
  const fs::path target = fs::path(g.out_dir) / (manifest.dataset_name + ".hydrated.jsonl");
  save_manifest(result.manifest, target);
  diag.info() << result.adapter_calls << " adapter calls, " << result.cache_hits
              << " cache hits\n";
  out << target.string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------------------

int cmd_search(const GlobalOptions& g, std::ostream& out, Diagnostics& diag) {
  ExperimentSpec spec = spec_from(g);
  if (spec.selection == SelectionKind::kZeroShot) spec.search.n_shots = 0;
  const auto data = load_experiment_data(spec);

  if (spec.selection == SelectionKind::kGreedy) {
    spec.search.validate_pool(data.train.records.size());
  } else if (static_cast<std::size_t>(spec.search.n_shots) > data.train.records.size()) {
    throw Error(ErrorCode::kPoolTooSmall, "train manifest smaller than n_shots");
  }
  const auto budget = spec.selection == SelectionKind::kGreedy ? spec.search.call_budget() : 0;
  diag.info() << "selection " << to_string(spec.selection) << ", pool "
              << data.train.records.size() << ", generation calls: " << budget << '\n';
  if (g.dry_run) return kExitOk;

  auto backend = make_backend(spec, data.train, data.eval);
  GenerationContext context;
  context.backend = backend.get();
  context.mask = spec.mask;
  context.prompt_template = spec.prompt_template;
  context.max_new_tokens = spec.backend.max_new_tokens;
  context.context_budget = spec.context_budget;

  std::vector<Exemplar> pool;
  for (const auto& r : data.train.records) pool.push_back(make_exemplar(r));

  FewShotState state;
  SearchTrace trace;
  if (spec.selection == SelectionKind::kGreedy && spec.search.n_shots > 0) {
    auto result = greedy_fewshot_search(pool, spec.search, context);
    state = std::move(result.state);
    trace = std::move(result.trace);
    for (const auto& e : trace.evaluations) {
      if (e.chosen) {
        diag.debug() << "iteration " << e.iteration << ": chose " << e.candidate_id
                     << " score " << e.score << (e.tie ? " (tie)" : "") << '\n';
      }
    }
  } else if (spec.selection == SelectionKind::kRandom) {
    state = sample_random_fewshot(pool, static_cast<std::size_t>(spec.search.n_shots),
                                  spec.search.seed);
  } else {
    state.provenance = spec.selection == SelectionKind::kGreedy ? Provenance::kGreedy
                                                                : Provenance::kRandom;
    state.seed = spec.search.seed;
  }

  const fs::path dir = fs::path(g.out_dir) / spec.name;
  fs::create_directories(dir);
  const std::vector<std::pair<fs::path, std::string>> files = {
      {dir / "fewshot.state", state_to_json(state).dump(2) + "\n"},
      {dir / "trace.rows", serialize_trace(trace)},
      {dir / "spec.snapshot", spec_snapshot(spec).dump(2) + "\n"},
  };
  for (const auto& [path, text] : files) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
    f << text;
    out << path.string() << '\n';
  }
  diag.info() << state.exemplars.size() << " exemplars selected\n";
  return kExitOk;
}

// --------------------------------------------------------------------------

int cmd_eval(const GlobalOptions& g, const std::string& state_path, std::ostream& out,
             Diagnostics& diag) {
  const ExperimentSpec spec = spec_from(g);
  RunOptions options;
  if (!state_path.empty()) options.fixed_state = load_state(state_path);

  if (g.dry_run) {
    const auto data = load_experiment_data(spec);
    std::uint64_t calls = data.eval.records.size() * static_cast<std::uint64_t>(spec.trials);
    if (!options.fixed_state && spec.selection == SelectionKind::kGreedy) {
      spec.search.validate_pool(data.train.records.size());
      calls += spec.search.call_budget() * static_cast<std::uint64_t>(spec.trials);
    }
    diag.info() << "dry run: " << data.eval.records.size() << " eval clips, generation calls: "
                << calls << '\n';
    return kExitOk;
  }

  const auto run = run_experiment(spec, options);
  for (const auto& path : persist_run(run, g.out_dir)) out << path.string() << '\n';
  diag.info() << render_table({run.report});
  return kExitOk;
}

// --------------------------------------------------------------------------

struct TransferArgs {
  std::string state;
  std::string native;
  std::string source_name = "source";
};

int cmd_transfer(const GlobalOptions& g, const TransferArgs& a, std::ostream& out,
                 Diagnostics& diag) {
  const ExperimentSpec spec = spec_from(g);
  const auto state = load_state(a.state);
  const auto native = load_summary(a.native);
  if (g.dry_run) {
    load_experiment_data(spec);
    diag.info() << "dry run: transfer of " << state.exemplars.size() << " exemplars validated\n";
    return kExitOk;
  }
  const auto report = transfer_evaluate(state, spec, native, a.source_name);
  const fs::path dir = fs::path(g.out_dir) / spec.name;
  fs::create_directories(dir);
  const fs::path path = dir / "transfer.summary";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f << serialize_transfer(report);
  diag.info() << report.source << " -> " << report.target << " " << to_string(report.metric)
              << ": native " << format_fixed(report.native * 100.0, 2) << ", transferred "
              << format_fixed(report.transferred * 100.0, 2) << ", delta "
              << format_fixed(report.delta_percent, 2) << "%\n";
  out << path.string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string points;
  std::vector<double> predict;
  std::string search_summary;
  std::string random_summary;
  std::string metric = "meteor";
};

std::vector<std::pair<int, double>> read_points(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  std::vector<std::pair<int, double>> points;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    try {
      if (line[0] == '{') {
        const auto j = nlohmann::json::parse(line);
        points.emplace_back(j.at("n").get<int>(), j.at("gain").get<double>());
      } else {
        std::istringstream fields(line);
        int n = 0;
        double gain = 0.0;
        if (!(fields >> n >> gain)) throw std::invalid_argument("expected \"n gain\"");
        points.emplace_back(n, gain);
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedLine,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return points;
}

int cmd_analyze(const GlobalOptions& g, const AnalyzeArgs& a, std::ostream& out,
                Diagnostics& diag) {
  if (a.points.empty() && (a.search_summary.empty() || a.random_summary.empty())) {
    throw Error(ErrorCode::kConfigError,
                "analyze needs --points or both --search-summary and --random-summary");
  }
  const Metric metric = parse_metric(a.metric);
  std::optional<std::vector<std::pair<int, double>>> points;
  if (!a.points.empty()) points = read_points(a.points);
  std::optional<std::pair<ScoreReport, ScoreReport>> reports;
  if (!a.search_summary.empty()) {
    reports.emplace(load_summary(a.search_summary), load_summary(a.random_summary));
  }
  if (g.dry_run) {
    diag.info() << "dry run: inputs validated\n";
    return kExitOk;
  }

  if (reports) {
    const auto value = [&](const ScoreReport& r) {
      const auto it = r.corpus.find(metric);
      if (it == r.corpus.end()) {
        throw Error(ErrorCode::kConfigError, r.experiment + " lacks " + std::string(a.metric));
      }
      return it->second;
    };
    out << "relative gain (" << a.metric << "): "
        << format_fixed(relative_gain(value(reports->first), value(reports->second)), 2)
        << "%\n";
  }
  if (points) {
    const auto curve = fit_inverse_curve(*points);
    out << "a=" << format_fixed(curve.a, 3) << ", b=" << format_fixed(curve.b, 3) << '\n';
    for (double n : a.predict) {
      out << "gain(" << format_fixed(n, 0) << ")=" << format_fixed(curve.predict(n), 3) << '\n';
    }
    diag.debug() << "fit over " << points->size() << " points\n";
  }
  return kExitOk;
}

// --------------------------------------------------------------------------

int cmd_report(const GlobalOptions& g, const std::vector<std::string>& inputs, std::ostream& out,
               Diagnostics& diag) {
  if (inputs.empty()) throw Error(ErrorCode::kConfigError, "report needs summary paths");
  std::vector<ScoreReport> reports;
  for (const auto& input : inputs) {
    fs::path p(input);
    if (fs::is_directory(p)) p /= "report.summary";
    reports.push_back(load_summary(p));
  }
  if (g.dry_run) {
    diag.info() << "dry run: " << reports.size() << " summaries validated\n";
    return kExitOk;
  }
  out << render_table(reports);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plug-and-play video summarization toolkit: few-shot prompt search and "
               "evaluation over modality texts"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config, "Experiment config (flat JSON object)");
  app.add_option("--set", g.overrides, "Override a config key: key=value")->take_all();
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_option("--seed", g.seed, "Seed override");
  app.add_flag("--dry-run", g.dry_run, "Validate everything, call no backend");
  app.add_flag("-v,--verbose", g.verbose, "More diagnostics");
  app.add_flag("-q,--quiet", g.quiet, "No diagnostics");

  HydrateArgs hydrate_args;
  auto* hydrate = app.add_subcommand("hydrate", "Fill missing modality texts via the adapter");
  hydrate->add_option("--manifest", hydrate_args.manifest, "Manifest (JSON Lines)")->required();
  hydrate->add_option("--adapter-url", hydrate_args.adapter_url, "Adapter base URL");
  hydrate->add_option("--cache-dir", hydrate_args.cache_dir, "Modality cache directory");
  hydrate->add_option("--mask", hydrate_args.mask, "Wanted modalities, e.g. ALI");
  hydrate->add_option("--split", hydrate_args.split, "train | validation | test");
  hydrate->add_option("--fps", hydrate_args.fps, "Frame rate for middle-frame selection");
  hydrate->add_option("--parallelism", hydrate_args.parallelism, "Concurrent adapter calls");
  hydrate->add_option("--fingerprint", hydrate_args.fingerprint,
                      "Only accept cache entries from this adapter fingerprint");

  auto* search = app.add_subcommand("search", "Select few-shot exemplars");

  std::string eval_state;
  auto* eval = app.add_subcommand("eval", "Run an experiment and write its reports");
  eval->add_option("--state", eval_state, "Use this fewshot.state instead of selecting");

  TransferArgs transfer_args;
  auto* transfer = app.add_subcommand("transfer", "Apply another domain's exemplars");
  transfer->add_option("--state", transfer_args.state, "Source fewshot.state")->required();
  transfer->add_option("--native", transfer_args.native, "Native report.summary")->required();
  transfer->add_option("--source-name", transfer_args.source_name, "Source domain label");

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "Relative gain and inverse-curve fit");
  analyze->add_option("--points", analyze_args.points, "Lines of \"n gain\"");
  analyze->add_option("--predict", analyze_args.predict, "Shot counts to extrapolate to");
  analyze->add_option("--search-summary", analyze_args.search_summary, "Greedy report.summary");
  analyze->add_option("--random-summary", analyze_args.random_summary, "Random report.summary");
  analyze->add_option("--metric", analyze_args.metric, "Metric for the relative gain");

  std::vector<std::string> report_inputs;
  auto* report = app.add_subcommand("report", "Render report summaries as a table");
  report->add_option("summaries", report_inputs, "report.summary files or run directories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out, help_err;
    const int code = app.exit(e, help_out, help_err);
    out << help_out.str();
    err << help_err.str();
    return code == 0 ? kExitOk : kExitUser;
  }

  Diagnostics diag(err, g);
  try {
    if (hydrate->parsed()) return cmd_hydrate(g, hydrate_args, out, diag);
    if (search->parsed()) return cmd_search(g, out, diag);
    if (eval->parsed()) return cmd_eval(g, eval_state, out, diag);
    if (transfer->parsed()) return cmd_transfer(g, transfer_args, out, diag);
    if (analyze->parsed()) return cmd_analyze(g, analyze_args, out, diag);
    if (report->parsed()) return cmd_report(g, report_inputs, out, diag);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_user_error(e.code()) ? kExitUser : kExitBackend;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitBackend;
  }
  return kExitUser;
}

}  // namespace ppvlm
