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

#include "ppvlm/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "ppvlm/error.hpp"
#include "ppvlm/porter_stemmer.hpp"

namespace ppvlm {

TokenSequence::TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    if (t.empty()) throw std::invalid_argument("TokenSequence: empty token");
  }
}

TokenSequence tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  const auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (e > b) {
      std::string token(text.substr(b, e - b));
      for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return TokenSequence(std::move(tokens));
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kBleu2: return "bleu2";
    case Metric::kBleu3: return "bleu3";
    case Metric::kMeteor: return "meteor";
    case Metric::kRougeL: return "rougeL";
  }
  return "unknown";
}

std::string_view display_name(Metric metric) {
  switch (metric) {
    case Metric::kBleu2: return "BLEU-2";
    case Metric::kBleu3: return "BLEU-3";
    case Metric::kMeteor: return "METEOR";
    case Metric::kRougeL: return "ROUGE-L";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::kUnknownMetric, "unknown metric \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// BLEU

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t k = 0; k < matches.size(); ++k) {
    matches[k] += other.matches[k];
    totals[k] += other.totals[k];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

namespace {

std::map<std::vector<std::string>, std::size_t> ngram_counts(const TokenSequence& seq,
                                                             std::size_t order) {
  std::map<std::vector<std::string>, std::size_t> counts;
  const auto& t = seq.tokens();
  for (std::size_t i = 0; i + order <= t.size(); ++i) {
    ++counts[std::vector<std::string>(t.begin() + static_cast<std::ptrdiff_t>(i),
                                      t.begin() + static_cast<std::ptrdiff_t>(i + order))];
  }
  return counts;
}

double brevity_penalty(std::size_t c, std::size_t r) {
  if (c == 0) return 0.0;
  if (c >= r) return 1.0;
  return std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
}

void check_order(int n) {
  if (n < 1 || n > 3) throw std::invalid_argument("BLEU order must be 1, 2 or 3");
}

}  // namespace

BleuStats bleu_stats(const TokenSequence& candidate, const TokenSequence& reference) {
  BleuStats stats;
  stats.candidate_length = candidate.size();
  stats.reference_length = reference.size();
  for (std::size_t order = 1; order <= stats.matches.size(); ++order) {
    const auto cand = ngram_counts(candidate, order);
    const auto ref = ngram_counts(reference, order);
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : cand) {
      total += count;
      const auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    stats.matches[order - 1] = matched;
    stats.totals[order - 1] = total;
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats, int n) {
  check_order(n);
  if (stats.candidate_length == 0) return 0.0;
  double log_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto m = stats.matches[static_cast<std::size_t>(k)];
    const auto t = stats.totals[static_cast<std::size_t>(k)];
    const double p = (m == 0 || t == 0) ? kBleuEpsilon
                                        : static_cast<double>(m) / static_cast<double>(t);
    log_sum += std::log(p);
  }
  return brevity_penalty(stats.candidate_length, stats.reference_length) *
         std::exp(log_sum / n);
}

MetricValue bleu_n(const TokenSequence& candidate, const TokenSequence& reference, int n) {
  if (n != 2 && n != 3) throw std::invalid_argument("bleu_n: n must be 2 or 3");
  return {n == 2 ? Metric::kBleu2 : Metric::kBleu3,
          bleu_from_stats(bleu_stats(candidate, reference), n)};
}

double sentence_bleu_smoothed(const TokenSequence& candidate, const TokenSequence& reference,
                              int n) {
  check_order(n);
  const auto stats = bleu_stats(candidate, reference);
  if (stats.candidate_length == 0 || stats.matches[0] == 0) return 0.0;
  double log_sum = std::log(static_cast<double>(stats.matches[0]) /
                            static_cast<double>(stats.totals[0]));
  for (int k = 1; k < n; ++k) {
    const auto m = stats.matches[static_cast<std::size_t>(k)];
    const auto t = stats.totals[static_cast<std::size_t>(k)];
    log_sum += std::log((static_cast<double>(m) + 1.0) / (static_cast<double>(t) + 1.0));
  }
  return brevity_penalty(stats.candidate_length, stats.reference_length) *
         std::exp(log_sum / n);
}

// ---------------------------------------------------------------------------
// ROUGE-L

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

MetricValue rouge_l(const TokenSequence& candidate, const TokenSequence& reference) {
  const auto l = lcs_length(candidate, reference);
  if (l == 0) return {Metric::kRougeL, 0.0};
  const double p = static_cast<double>(l) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(l) / static_cast<double>(reference.size());
  return {Metric::kRougeL, 2.0 * p * r / (p + r)};
}

// ---------------------------------------------------------------------------
// METEOR

namespace {

std::vector<std::string> stems_of(const TokenSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const auto& t : seq.tokens()) out.push_back(porter_stem(t));
  return out;
}

struct BudgetExceeded {};

class AlignmentSearch {
 public:
  AlignmentSearch(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                  std::size_t budget)
      : n_cand_(cand.size()), words_((ref.size() + 63) / 64), budget_(budget) {
    targets_.resize(n_cand_);
    for (std::size_t i = 0; i < n_cand_; ++i) {
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ref[j] == cand[i]) targets_[i].push_back(j);
      }
    }
    // Used targets that no later token can reach do not affect the rest of
    // the search, so they are masked out of the memo key.
    future_.assign(n_cand_ + 1, std::vector<std::uint64_t>(words_, 0));
    for (std::size_t pos = n_cand_; pos-- > 0;) {
      future_[pos] = future_[pos + 1];
      for (std::size_t j : targets_[pos]) future_[pos][j / 64] |= std::uint64_t{1} << (j % 64);
    }
  }

  MeteorAlignment solve() {
    std::vector<std::uint64_t> used(words_, 0);
    const auto best = search(0, kNone, used);
    return {best.matches, best.chunks, true};
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Value {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    bool better_than(const Value& o) const {
      return matches != o.matches ? matches > o.matches : chunks < o.chunks;
    }
  };

  struct Key {
    std::size_t pos;
    std::size_t prev;
    std::vector<std::uint64_t> used;
    bool operator==(const Key&) const = default;
  };

  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = k.pos * 0x9E3779B97F4A7C15ULL ^ (k.prev + 0x632BE59BD9B4E019ULL);
      for (auto w : k.used) h = (h ^ w) * 0x100000001B3ULL;
      return static_cast<std::size_t>(h);
    }
  };

  static bool test(const std::vector<std::uint64_t>& used, std::size_t j) {
    return (used[j / 64] >> (j % 64)) & 1U;
  }

  Value search(std::size_t pos, std::size_t prev, std::vector<std::uint64_t>& used) {
    if (pos == n_cand_) return {};
    // The previous target only matters when this token could extend its chunk.
    if (prev != kNone &&
        std::find(targets_[pos].begin(), targets_[pos].end(), prev + 1) == targets_[pos].end()) {
      prev = kNone;
    }
    Key key{pos, prev, used};
    for (std::size_t w = 0; w < words_; ++w) key.used[w] &= future_[pos][w];
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= budget_) throw BudgetExceeded{};

    Value best = search(pos + 1, kNone, used);
    for (std::size_t j : targets_[pos]) {
      if (test(used, j)) continue;
      used[j / 64] |= (std::uint64_t{1} << (j % 64));
      Value v = search(pos + 1, j, used);
      used[j / 64] &= ~(std::uint64_t{1} << (j % 64));
      v.matches += 1;
      if (!(prev != kNone && j == prev + 1)) v.chunks += 1;
      if (v.better_than(best)) best = v;
    }
    memo_.emplace(std::move(key), best);
    return best;
  }

  std::size_t n_cand_;
  std::size_t words_;
  std::size_t budget_;
  std::vector<std::vector<std::size_t>> targets_;
  std::vector<std::vector<std::uint64_t>> future_;
  std::unordered_map<Key, Value, KeyHash> memo_;
};

MeteorAlignment greedy_alignment(const std::vector<std::string>& cand,
                                 const std::vector<std::string>& ref) {
  std::vector<char> cand_used(cand.size(), 0), ref_used(ref.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (;;) {
    std::size_t best_len = 0, best_i = 0, best_j = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (cand_used[i]) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        std::size_t len = 0;
        while (i + len < cand.size() && j + len < ref.size() && !cand_used[i + len] &&
               !ref_used[j + len] && cand[i + len] == ref[j + len]) {
          ++len;
        }
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) break;
    for (std::size_t k = 0; k < best_len; ++k) {
      cand_used[best_i + k] = ref_used[best_j + k] = 1;
      pairs.emplace_back(best_i + k, best_j + k);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  MeteorAlignment out;
  out.exact = false;
  out.matches = pairs.size();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (k == 0 || pairs[k - 1].first + 1 != pairs[k].first ||
        pairs[k - 1].second + 1 != pairs[k].second) {
      ++out.chunks;
    }
  }
  return out;
}

}  // namespace

MeteorAlignment meteor_alignment(const TokenSequence& candidate, const TokenSequence& reference,
                                 std::size_t budget) {
  if (candidate.empty() || reference.empty()) return {};
  const auto cand = stems_of(candidate);
  const auto ref = stems_of(reference);
  try {
    return AlignmentSearch(cand, ref, budget).solve();
  } catch (const BudgetExceeded&) {
    return greedy_alignment(cand, ref);
  }
}

MeteorAlignment meteor_alignment_greedy(const TokenSequence& candidate,
                                        const TokenSequence& reference) {
  if (candidate.empty() || reference.empty()) return {};
  return greedy_alignment(stems_of(candidate), stems_of(reference));
}

double meteor_from_alignment(const MeteorAlignment& alignment, std::size_t candidate_length,
                             std::size_t reference_length, const MeteorParams& params) {
  if (alignment.matches == 0) return 0.0;
  const double m = static_cast<double>(alignment.matches);
  const double precision = m / static_cast<double>(candidate_length);
  const double recall = m / static_cast<double>(reference_length);
  const double f_mean =
      precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
  const double penalty =
      params.gamma * std::pow(static_cast<double>(alignment.chunks) / m, params.beta);
  return f_mean * (1.0 - penalty);
}

MetricValue meteor(const TokenSequence& candidate, const TokenSequence& reference,
                   const MeteorParams& params) {
  return {Metric::kMeteor, meteor_from_alignment(meteor_alignment(candidate, reference),
                                                 candidate.size(), reference.size(), params)};
}

// ---------------------------------------------------------------------------
// Dispatch and corpus aggregation

double score_pair(Metric metric, const TokenSequence& candidate,
                  const TokenSequence& reference) {
  switch (metric) {
    case Metric::kBleu2: return bleu_n(candidate, reference, 2).value;
    case Metric::kBleu3: return bleu_n(candidate, reference, 3).value;
    case Metric::kMeteor: return meteor(candidate, reference).value;
    case Metric::kRougeL: return rouge_l(candidate, reference).value;
  }
  return 0.0;
}

namespace {

bool is_bleu(Metric metric) { return metric == Metric::kBleu2 || metric == Metric::kBleu3; }

MetricValue aggregate(const std::vector<TextPair>& pairs, Metric metric,
                      const std::vector<BleuStats>& stats, const std::vector<double>& values) {
  if (is_bleu(metric)) {
    BleuStats total;
    for (const auto& s : stats) total += s;
    return {metric, bleu_from_stats(total, metric == Metric::kBleu2 ? 2 : 3)};
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  return {metric, sum / static_cast<double>(pairs.size())};
}

}  // namespace

MetricValue corpus_score_serial(const std::vector<TextPair>& pairs, Metric metric) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyCorpus, "no pairs to score");
  std::vector<BleuStats> stats(pairs.size());
  std::vector<double> values(pairs.size(), 0.0);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto cand = tokenize(pairs[i].first);
    const auto ref = tokenize(pairs[i].second);
    if (is_bleu(metric)) {
      stats[i] = bleu_stats(cand, ref);
    } else {
      values[i] = score_pair(metric, cand, ref);
    }
  }
  return aggregate(pairs, metric, stats, values);
}

MetricValue corpus_score(const std::vector<TextPair>& pairs, Metric metric, int parallelism) {
  if (parallelism <= 1) return corpus_score_serial(pairs, metric);
  if (pairs.empty()) throw Error(ErrorCode::kEmptyCorpus, "no pairs to score");
  std::vector<BleuStats> stats(pairs.size());
  std::vector<double> values(pairs.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  const bool bleu = is_bleu(metric);
  // Per-pair slots, summed serially afterwards: same result at any thread count.
#pragma omp parallel for schedule(dynamic) num_threads(parallelism)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& pair = pairs[static_cast<std::size_t>(i)];
    const auto cand = tokenize(pair.first);
    const auto ref = tokenize(pair.second);
    if (bleu) {
      stats[static_cast<std::size_t>(i)] = bleu_stats(cand, ref);
    } else {
      values[static_cast<std::size_t>(i)] = score_pair(metric, cand, ref);
    }
  }
  return aggregate(pairs, metric, stats, values);
}

}  // namespace ppvlm
