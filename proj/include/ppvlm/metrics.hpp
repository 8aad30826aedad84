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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ppvlm {

// Lowercase tokens, none empty.
class TokenSequence {
 public:
  TokenSequence() = default;
  // Throws std::invalid_argument on an empty token.
  explicit TokenSequence(std::vector<std::string> tokens);

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  bool operator==(const TokenSequence&) const = default;

 private:
  std::vector<std::string> tokens_;
};

// Lowercase, split on whitespace, strip leading and trailing ASCII
// punctuation from each token, drop what becomes empty.
TokenSequence tokenize(std::string_view text);

enum class Metric { kBleu2, kBleu3, kMeteor, kRougeL };

// Table column order.
inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::kBleu2, Metric::kBleu3,
                                                      Metric::kMeteor, Metric::kRougeL};

std::string_view to_string(Metric metric);     // bleu2, bleu3, meteor, rougeL
std::string_view display_name(Metric metric);  // BLEU-2, BLEU-3, METEOR, ROUGE-L
Metric parse_metric(std::string_view name);    // throws UnknownMetric

struct MetricValue {
  Metric metric;
  double value;  // in [0, 1]
};

// ---------------------------------------------------------------------------
// BLEU

inline constexpr double kBleuEpsilon = 1e-9;

struct BleuStats {
  std::array<std::size_t, 3> matches{};  // clipped n-gram matches, orders 1..3
  std::array<std::size_t, 3> totals{};   // candidate n-gram counts
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const TokenSequence& candidate, const TokenSequence& reference);

// Geometric mean of p_1..p_n times min(1, exp(1 - r/c)). A zero precision is
// replaced by kBleuEpsilon; an empty candidate scores 0. n is 2 or 3.
double bleu_from_stats(const BleuStats& stats, int n);

MetricValue bleu_n(const TokenSequence& candidate, const TokenSequence& reference, int n);

// Per-sentence diagnostic variant: add-one smoothing on orders >= 2; zero
// unigram matches still score 0.
double sentence_bleu_smoothed(const TokenSequence& candidate, const TokenSequence& reference,
                              int n);

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);
MetricValue rouge_l(const TokenSequence& candidate, const TokenSequence& reference);

// ---------------------------------------------------------------------------
// METEOR (exact + Porter-stem matching)

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  bool exact = true;  // false when the search budget ran out
};

// Memo entries the exact alignment search may create before giving up.
inline constexpr std::size_t kMeteorSearchBudget = 200000;

// Among one-to-one alignments pairing tokens with equal Porter stems (exact
// matches included), maximizes the number of matches, then minimizes chunks.
// Minimizing chunks is NP-hard in general, so the exact search (memoized over
// position, previous target and still-relevant used targets) is capped at
// `budget` states; past that the greedy alignment is returned with
// exact = false. Both are deterministic.
MeteorAlignment meteor_alignment(const TokenSequence& candidate,
                                 const TokenSequence& reference,
                                 std::size_t budget = kMeteorSearchBudget);

// Longest common stem run first (ties: earliest candidate, then earliest
// reference position), repeated until no pair is left. Reaches the maximum
// match count; chunks are an upper bound on the optimum.
MeteorAlignment meteor_alignment_greedy(const TokenSequence& candidate,
                                        const TokenSequence& reference);

double meteor_from_alignment(const MeteorAlignment& alignment, std::size_t candidate_length,
                             std::size_t reference_length, const MeteorParams& params = {});

MetricValue meteor(const TokenSequence& candidate, const TokenSequence& reference,
                   const MeteorParams& params = {});

// ---------------------------------------------------------------------------
// Dispatch and corpus aggregation

// Per-pair score as used by the greedy objective.
double score_pair(Metric metric, const TokenSequence& candidate, const TokenSequence& reference);

using TextPair = std::pair<std::string, std::string>;  // (candidate, reference)

// BLEU pools clipped counts and lengths over all pairs; METEOR and ROUGE-L
// are the mean of per-pair values. Throws EmptyCorpus. parallelism > 1
// scores pairs with OpenMP; the result is identical to the serial path.
MetricValue corpus_score(const std::vector<TextPair>& pairs, Metric metric,
                         int parallelism = 1);

// Reference implementation: plain loop, no OpenMP.
MetricValue corpus_score_serial(const std::vector<TextPair>& pairs, Metric metric);

}  // namespace ppvlm
