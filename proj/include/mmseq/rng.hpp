// Copyright 2026 The mmseq Authors
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

#ifndef MMSEQ_RNG_HPP_
#define MMSEQ_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace mmseq {

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based sub-seed: the stream index is mixed before combining so that
// neighbouring (seed, stream) pairs give unrelated generators.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded random source. Satisfies UniformRandomBitGenerator so it can drive
// std::shuffle and the standard distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  // Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mmseq

#endif  // MMSEQ_RNG_HPP_
