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
#include <cstdint>
#include <string>
#include <vector>

#include "ppvlm/backend.hpp"
#include "ppvlm/core_types.hpp"
#include "ppvlm/metrics.hpp"
#include "ppvlm/prompting.hpp"

namespace ppvlm {

struct SearchConfig {
  int n_shots = 5;
  int holdout_size = 30;
  int search_size = 30;
  Metric metric = Metric::kMeteor;
  std::uint64_t seed = 0;
  int parallelism = 1;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
  // Throws PoolExhausted when holdout + search + n_shots exceeds pool_size.
  void validate_pool(std::size_t pool_size) const;
  // Generation calls of a full greedy search: n_shots * search_size * holdout_size.
  std::uint64_t call_budget() const;
};

// Everything needed to turn (few-shot state, query) into a generated summary.
struct GenerationContext {
  Backend* backend = nullptr;
  ModalityMask mask = ModalityMask::all();
  PromptTemplate prompt_template;
  int max_new_tokens = kDefaultMaxNewTokens;
  std::size_t context_budget = 0;

  // Greedy decoding, stopping at the exemplar separator.
  GenerationRequest request_for(const FewShotState& state, const ModalityTexts& query) const;
};

struct CandidateEvaluation {
  int iteration = 0;      // 1-based
  std::size_t position = 0;  // position in the sampled search set
  std::string candidate_id;
  double score = 0.0;     // summed over the holdout set
  bool chosen = false;
  bool tie = false;       // another candidate reached the same best score
};

struct SearchTrace {
  std::vector<std::string> holdout_ids;
  std::vector<CandidateEvaluation> evaluations;

  std::vector<CandidateEvaluation> iteration(int index) const;
};

// One line per candidate evaluation, fields in declaration order.
std::string serialize_trace(const SearchTrace& trace);

// n draws without replacement from `pool`, draw order kept. Throws PoolTooSmall.
FewShotState sample_random_fewshot(const std::vector<Exemplar>& pool, std::size_t n,
                                   std::uint64_t seed);

// Sum over the holdout set of metric(y_h, generate(F + candidate, x_h)).
// Throws BackendFailure naming the holdout clip when any generation fails.
double score_candidate(const FewShotState& state, const Exemplar& candidate,
                       const std::vector<Exemplar>& holdout, const GenerationContext& context,
                       Metric metric);

// Scores of every candidate, in candidate order. The serial variant is the
// reference; the parallel one distributes candidates over OpenMP threads and
// returns identical values.
std::vector<double> score_candidates_serial(const FewShotState& state,
                                            const std::vector<Exemplar>& candidates,
                                            const std::vector<Exemplar>& holdout,
                                            const GenerationContext& context, Metric metric);
std::vector<double> score_candidates_parallel(const FewShotState& state,
                                              const std::vector<Exemplar>& candidates,
                                              const std::vector<Exemplar>& holdout,
                                              const GenerationContext& context, Metric metric,
                                              int parallelism);

struct SearchResult {
  FewShotState state;
  SearchTrace trace;
};

// Greedy exemplar search: holdout drawn once from the pool, a fresh search
// set drawn from pool minus (holdout + chosen) every iteration, argmax of
// the holdout score appended. Ties go to the earliest sampled position.
SearchResult greedy_fewshot_search(const std::vector<Exemplar>& pool,
                                   const SearchConfig& config,
                                   const GenerationContext& context);

}  // namespace ppvlm
