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

// Serial reference vs OpenMP kernels: candidate scoring and corpus scoring.

#include <benchmark/benchmark.h>

#include <random>

#include "ppvlm/metrics.hpp"
#include "ppvlm/selection.hpp"

using namespace ppvlm;

namespace {

const char* kWords[] = {"chop", "the", "onions", "stir", "pan", "slowly", "add", "salt",
                        "boil", "water", "pasta", "until", "soft", "then", "drain", "it"};

std::string sentence(std::mt19937& gen, int length) {
  std::uniform_int_distribution<int> word(0, 15);
  std::string s;
  for (int i = 0; i < length; ++i) s += std::string(i ? " " : "") + kWords[word(gen)];
  return s;
}

std::vector<Exemplar> pool_of(std::size_t n) {
  std::mt19937 gen(1);
  std::vector<Exemplar> pool;
  for (std::size_t i = 0; i < n; ++i) {
    Exemplar e;
    e.input.audio_transcript = sentence(gen, 20) + " " + std::to_string(i);
    e.input.video_label = "Cooking";
    e.output = sentence(gen, 12);
    e.source_clip_id = "c" + std::to_string(i);
    pool.push_back(std::move(e));
  }
  return pool;
}

MockBackend& mock() {
  static MockBackend backend([] {
    MockConfig c;
    c.mode = MockMode::kEchoLastAnswer;
    c.fixed_text = "stir the pan";
    return c;
  }());
  return backend;
}

void BM_CandidateScoring(benchmark::State& state) {
  const int parallelism = static_cast<int>(state.range(0));
  const auto pool = pool_of(60);
  const std::vector<Exemplar> holdout(pool.begin(), pool.begin() + 30);
  const std::vector<Exemplar> candidates(pool.begin() + 30, pool.end());
  GenerationContext ctx;
  ctx.backend = &mock();
  ctx.mask = ModalityMask::parse("AL");
  for (auto _ : state) {
    auto scores = parallelism <= 1
                      ? score_candidates_serial({}, candidates, holdout, ctx, Metric::kMeteor)
                      : score_candidates_parallel({}, candidates, holdout, ctx, Metric::kMeteor,
                                                  parallelism);
    benchmark::DoNotOptimize(scores);
  }
}
BENCHMARK(BM_CandidateScoring)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_CorpusScoring(benchmark::State& state) {
  const int parallelism = static_cast<int>(state.range(0));
  std::mt19937 gen(2);
  std::vector<TextPair> pairs;
  for (int i = 0; i < 500; ++i) pairs.emplace_back(sentence(gen, 14), sentence(gen, 14));
  for (auto _ : state) {
    auto v = parallelism <= 1 ? corpus_score_serial(pairs, Metric::kMeteor)
                              : corpus_score(pairs, Metric::kMeteor, parallelism);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_CorpusScoring)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
