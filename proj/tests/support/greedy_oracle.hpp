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

// Brute-force reference for greedy exemplar search. It redraws the holdout
// and search sets from the documented splitmix64-v1 procedure, builds every
// prompt outcome from a lookup table, and scores each candidate with the
// exhaustive METEOR oracle.

#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "ppvlm/backend.hpp"
#include "ppvlm/core_types.hpp"
#include "ppvlm/selection.hpp"

namespace ppvlm::testing {

// Response keyed on (id of the last exemplar in the prompt, id of the query).
// Clips are recognised by their unique transcript line.
class PairTableBackend : public Backend {
 public:
  using Table = std::map<std::pair<std::string, std::string>, std::string>;

  PairTableBackend(const std::vector<Exemplar>& pool, Table table) : table_(std::move(table)) {
    for (const auto& e : pool) by_transcript_[e.input.audio_transcript] = e.source_clip_id;
  }

  GenerationResponse generate(const GenerationRequest& request) override {
    std::vector<std::string> blocks;
    const std::string sep = "\n###\n";
    std::size_t pos = 0;
    for (;;) {
      const auto hit = request.prompt.find(sep, pos);
      blocks.push_back(request.prompt.substr(pos, hit == std::string::npos ? hit : hit - pos));
      if (hit == std::string::npos) break;
      pos = hit + sep.size();
    }
    const std::string query = id_of(blocks.back());
    const std::string last = blocks.size() >= 3 ? id_of(blocks[blocks.size() - 2]) : "";
    GenerationResponse r;
    r.text = table_.at({last, query});
    r.model_fingerprint = "pair-table";
    return r;
  }

 private:
  std::string id_of(const std::string& block) const {
    const std::string key = "Transcript: ";
    const auto at = block.find(key);
    const auto end = block.find('\n', at);
    return by_transcript_.at(block.substr(at + key.size(), end - at - key.size()));
  }

  Table table_;
  std::map<std::string, std::string> by_transcript_;
};

// splitmix64-v1, restated from its definition.
struct OracleRng {
  std::uint64_t s;
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  OracleRng(std::uint64_t seed, std::uint64_t stream)
      : s(mix(seed ^ mix((stream + 1) * 0x9E3779B97F4A7C15ULL))) {}
  std::uint64_t next() { return mix(s += 0x9E3779B97F4A7C15ULL); }
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const auto x = next();
      if (x >= threshold) return x % bound;
    }
  }
  std::vector<std::size_t> sample(std::size_t n, std::size_t k) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    for (std::size_t i = 0; i < k; ++i) std::swap(v[i], v[i + below(n - i)]);
    v.resize(k);
    return v;
  }
};

struct GreedyFixture {
  std::vector<Exemplar> pool;
  PairTableBackend::Table table;
};

// |T| exemplars whose references and every table response are short
// sequences over the oracle alphabet.
inline GreedyFixture make_greedy_fixture(std::size_t pool_size, std::uint32_t seed) {
  std::mt19937 gen(seed);
  const auto& alphabet = oracle_alphabet();
  auto sentence = [&] {
    std::uniform_int_distribution<int> len(1, 6), word(0, 3);
    Tokens t(static_cast<std::size_t>(len(gen)));
    for (auto& w : t) w = alphabet[static_cast<std::size_t>(word(gen))];
    return join_tokens(t);
  };
  GreedyFixture f;
  for (std::size_t i = 0; i < pool_size; ++i) {
    Exemplar e;
    e.source_clip_id = "t" + std::to_string(i);
    e.input.audio_transcript = "spoken words of clip " + std::to_string(i);
    e.input.video_label = "Cooking";
    e.input.image_caption = "frame " + std::to_string(i);
    e.output = sentence();
    f.pool.push_back(std::move(e));
  }
  for (const auto& q : f.pool) {
    f.table[{"", q.source_clip_id}] = sentence();
    for (const auto& c : f.pool) f.table[{c.source_clip_id, q.source_clip_id}] = sentence();
  }
  return f;
}

struct GreedyOracleResult {
  std::vector<std::string> holdout_ids;
  std::vector<CandidateEvaluation> evaluations;
  std::vector<std::string> chosen_ids;
};

inline GreedyOracleResult brute_force_greedy(const GreedyFixture& f, std::size_t holdout,
                                             std::size_t search, int n_shots, std::uint64_t seed) {
  GreedyOracleResult out;
  std::vector<bool> excluded(f.pool.size(), false);
  OracleRng h_rng(seed, 0);
  std::vector<std::size_t> h_idx = h_rng.sample(f.pool.size(), holdout);
  for (auto i : h_idx) {
    excluded[i] = true;
    out.holdout_ids.push_back(f.pool[i].source_clip_id);
  }
  for (int it = 1; it <= n_shots; ++it) {
    std::vector<std::size_t> remaining;
    for (std::size_t i = 0; i < f.pool.size(); ++i) {
      if (!excluded[i]) remaining.push_back(i);
    }
    OracleRng s_rng(seed, static_cast<std::uint64_t>(it));
    const auto picks = s_rng.sample(remaining.size(), search);
    std::vector<double> scores;
    for (auto p : picks) {
      const auto& c = f.pool[remaining[p]];
      double sum = 0.0;
      for (auto h : h_idx) {
        const auto& q = f.pool[h];
        const std::string text = f.table.at({c.source_clip_id, q.source_clip_id});
        std::istringstream a(text), b(q.output);
        Tokens gen_tokens, ref_tokens;
        for (std::string w; a >> w;) gen_tokens.push_back(w);
        for (std::string w; b >> w;) ref_tokens.push_back(w);
        sum += oracle_meteor(gen_tokens, ref_tokens);
      }
      scores.push_back(sum);
    }
    std::size_t best = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (scores[k] > scores[best]) best = k;
    }
    std::size_t ties = 0;
    for (double s : scores) ties += s == scores[best] ? 1 : 0;
    for (std::size_t k = 0; k < picks.size(); ++k) {
      CandidateEvaluation e;
      e.iteration = it;
      e.position = k;
      e.candidate_id = f.pool[remaining[picks[k]]].source_clip_id;
      e.score = scores[k];
      e.chosen = k == best;
      e.tie = k == best && ties > 1;
      out.evaluations.push_back(e);
    }
    excluded[remaining[picks[best]]] = true;
    out.chosen_ids.push_back(f.pool[remaining[picks[best]]].source_clip_id);
  }
  return out;
}

// Empty when the search result matches the oracle exactly; otherwise the
// first difference.
inline std::string compare_with_oracle(const SearchResult& result, const GreedyOracleResult& oracle) {
  if (result.trace.holdout_ids != oracle.holdout_ids) return "holdout differs";
  if (result.state.exemplar_ids() != oracle.chosen_ids) return "chosen exemplars differ";
  const auto& got = result.trace.evaluations;
  if (got.size() != oracle.evaluations.size()) return "trace length differs";
  for (std::size_t i = 0; i < got.size(); ++i) {
    const auto& a = got[i];
    const auto& b = oracle.evaluations[i];
    if (a.iteration != b.iteration || a.position != b.position || a.candidate_id != b.candidate_id ||
        a.score != b.score || a.chosen != b.chosen || a.tie != b.tie) {
      std::ostringstream s;
      s.precision(17);
      s << "evaluation " << i << ": got " << a.candidate_id << " " << a.score << ", oracle "
        << b.candidate_id << " " << b.score;
      return s.str();
    }
  }
  return {};
}

}  // namespace ppvlm::testing
