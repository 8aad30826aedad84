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

#include "ppvlm/selection.hpp"

#include <algorithm>
#include <exception>
#include <unordered_set>

#include <json.hpp>

#include "ppvlm/rng.hpp"

namespace ppvlm {

void SearchConfig::validate() const {
  if (n_shots < 0) throw Error(ErrorCode::kConfigError, "n_shots must be >= 0");
  if (holdout_size <= 0) throw Error(ErrorCode::kConfigError, "holdout_size must be > 0");
  if (search_size <= 0) throw Error(ErrorCode::kConfigError, "search_size must be > 0");
  if (parallelism < 1) throw Error(ErrorCode::kConfigError, "parallelism must be >= 1");
}

void SearchConfig::validate_pool(std::size_t pool_size) const {
  validate();
  const auto needed = static_cast<std::size_t>(holdout_size) +
                      static_cast<std::size_t>(search_size) + static_cast<std::size_t>(n_shots);
  if (needed > pool_size) {
    throw Error(ErrorCode::kPoolExhausted,
                "greedy search needs holdout + search + n_shots = " + std::to_string(needed) +
                    " exemplars, pool has " + std::to_string(pool_size));
  }
}

std::uint64_t SearchConfig::call_budget() const {
  return static_cast<std::uint64_t>(n_shots) * static_cast<std::uint64_t>(search_size) *
         static_cast<std::uint64_t>(holdout_size);
}

GenerationRequest GenerationContext::request_for(const FewShotState& state,
                                                 const ModalityTexts& query) const {
  GenerationRequest request;
  request.prompt = build_prompt(state, query, mask, prompt_template, context_budget);
  request.max_new_tokens = max_new_tokens;
  request.stop_sequences = {prompt_template.exemplar_separator};
  request.temperature = 0.0;
  return request;
}

std::vector<CandidateEvaluation> SearchTrace::iteration(int index) const {
  std::vector<CandidateEvaluation> out;
  for (const auto& e : evaluations) {
    if (e.iteration == index) out.push_back(e);
  }
  return out;
}

std::string serialize_trace(const SearchTrace& trace) {
  std::string out;
  for (const auto& e : trace.evaluations) {
    nlohmann::ordered_json j;
    j["iteration"] = e.iteration;
    j["position"] = e.position;
    j["candidate_id"] = e.candidate_id;
    j["score"] = e.score;
    j["chosen"] = e.chosen;
    j["tie"] = e.tie;
    out += j.dump();
    out += '\n';
  }
  return out;
}

FewShotState sample_random_fewshot(const std::vector<Exemplar>& pool, std::size_t n,
                                   std::uint64_t seed) {
  if (n > pool.size()) {
    throw Error(ErrorCode::kPoolTooSmall, "asked for " + std::to_string(n) +
                                              " exemplars from a pool of " +
                                              std::to_string(pool.size()));
  }
  auto rng = SplitMix64::stream(seed, kRandomStream);
  FewShotState state;
  state.provenance = Provenance::kRandom;
  state.seed = seed;
  for (std::size_t idx : sample_without_replacement(pool.size(), n, rng)) {
    state.exemplars.push_back(pool[idx]);
  }
  require_distinct_sources(state);
  return state;
}

double score_candidate(const FewShotState& state, const Exemplar& candidate,
                       const std::vector<Exemplar>& holdout, const GenerationContext& context,
                       Metric metric) {
  for (const auto& e : state.exemplars) {
    if (e.source_clip_id == candidate.source_clip_id) {
      throw Error(ErrorCode::kValidationFailed,
                  "candidate \"" + candidate.source_clip_id + "\" is already selected");
    }
  }
  for (const auto& h : holdout) {
    if (h.source_clip_id == candidate.source_clip_id) {
      throw Error(ErrorCode::kValidationFailed,
                  "candidate \"" + candidate.source_clip_id + "\" is in the holdout set");
    }
  }

  FewShotState trial = state;
  trial.exemplars.push_back(candidate);
  double sum = 0.0;
  for (const auto& h : holdout) {
    GenerationResponse response;
    try {
      response = context.backend->generate(context.request_for(trial, h.input));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kBackendFailure,
                  "holdout \"" + h.source_clip_id + "\": " + e.what());
    }
    sum += score_pair(metric, tokenize(response.text), tokenize(h.output));
  }
  return sum;
}

std::vector<double> score_candidates_serial(const FewShotState& state,
                                            const std::vector<Exemplar>& candidates,
                                            const std::vector<Exemplar>& holdout,
                                            const GenerationContext& context, Metric metric) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    scores.push_back(score_candidate(state, c, holdout, context, metric));
  }
  return scores;
}

std::vector<double> score_candidates_parallel(const FewShotState& state,
                                              const std::vector<Exemplar>& candidates,
                                              const std::vector<Exemplar>& holdout,
                                              const GenerationContext& context, Metric metric,
                                              int parallelism) {
  std::vector<double> scores(candidates.size(), 0.0);
  std::vector<std::exception_ptr> failures(candidates.size());
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, parallelism))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      scores[k] = score_candidate(state, candidates[k], holdout, context, metric);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  // Earliest failing candidate wins so the error matches the serial path.
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return scores;
}

SearchResult greedy_fewshot_search(const std::vector<Exemplar>& pool,
                                   const SearchConfig& config,
                                   const GenerationContext& context) {
  config.validate_pool(pool.size());
  {
    std::unordered_set<std::string> ids;
    for (const auto& e : pool) {
      if (!ids.insert(e.source_clip_id).second) {
        throw Error(ErrorCode::kValidationFailed,
                    "duplicate clip \"" + e.source_clip_id + "\" in search pool");
      }
    }
  }

  SearchResult result;
  result.state.provenance = Provenance::kGreedy;
  result.state.metric_name = std::string(to_string(config.metric));
  result.state.seed = config.seed;

  auto holdout_rng = SplitMix64::stream(config.seed, 0);
  const auto holdout_idx = sample_without_replacement(
      pool.size(), static_cast<std::size_t>(config.holdout_size), holdout_rng);
  std::vector<char> excluded(pool.size(), 0);
  std::vector<Exemplar> holdout;
  for (std::size_t idx : holdout_idx) {
    excluded[idx] = 1;
    holdout.push_back(pool[idx]);
    result.trace.holdout_ids.push_back(pool[idx].source_clip_id);
  }

  for (int it = 1; it <= config.n_shots; ++it) {
    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!excluded[i]) remaining.push_back(i);
    }
    if (remaining.size() < static_cast<std::size_t>(config.search_size)) {
      throw Error(ErrorCode::kPoolExhausted,
                  "iteration " + std::to_string(it) + ": " + std::to_string(remaining.size()) +
                      " exemplars left, search set needs " + std::to_string(config.search_size));
    }
    auto search_rng = SplitMix64::stream(config.seed, static_cast<std::uint64_t>(it));
    const auto picks = sample_without_replacement(
        remaining.size(), static_cast<std::size_t>(config.search_size), search_rng);
    std::vector<std::size_t> search_idx;
    std::vector<Exemplar> candidates;
    for (std::size_t p : picks) {
      search_idx.push_back(remaining[p]);
      candidates.push_back(pool[remaining[p]]);
    }

    std::vector<double> scores;
    try {
      scores = config.parallelism > 1
                   ? score_candidates_parallel(result.state, candidates, holdout, context,
                                               config.metric, config.parallelism)
                   : score_candidates_serial(result.state, candidates, holdout, context,
                                             config.metric);
    } catch (const Error& e) {
      throw Error(e.code(), "greedy iteration " + std::to_string(it) + ": " + e.detail());
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
      if (scores[k] > scores[best]) best = k;
    }
    const bool tie = std::count(scores.begin(), scores.end(), scores[best]) > 1;

    for (std::size_t k = 0; k < candidates.size(); ++k) {
      CandidateEvaluation e;
      e.iteration = it;
      e.position = k;
      e.candidate_id = candidates[k].source_clip_id;
      e.score = scores[k];
      e.chosen = k == best;
      e.tie = tie && k == best;
      result.trace.evaluations.push_back(std::move(e));
    }
    excluded[search_idx[best]] = 1;
    result.state.exemplars.push_back(candidates[best]);
  }
  require_distinct_sources(result.state);
  return result;
}

}  // namespace ppvlm
