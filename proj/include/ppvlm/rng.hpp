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
#include <vector>

namespace ppvlm {

// SplitMix64 (Steele, Lea, Flood 2014), 64-bit state. The output sequence is
// fully specified, so seeded runs reproduce across platforms and compilers.
// Bump kAlgorithmId if the generator or the sampling routines change.
class SplitMix64 {
 public:
  static constexpr const char* kAlgorithmId = "splitmix64-v1";

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  // Independent stream for (seed, stream_id). Stream ids in use: 0 holdout
  // draw, i for the search set of greedy iteration i, kRandomStream for
  // random few-shot selection.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next();

  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

inline constexpr std::uint64_t kRandomStream = 0x52414E44;  // "RAND"

// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    SplitMix64& rng);

}  // namespace ppvlm
