/* Copyright 2026 The hetnas Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HETNAS_RNG_H_
#define HETNAS_RNG_H_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace hetnas {

// Platform-stable random source. std::mt19937_64 has a fully specified
// output sequence, but the standard distributions do not, so every draw goes
// through the conversions below instead of <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t Below(std::uint64_t n);

  // Standard normal via Box-Muller (one value per call, no caching).
  double Normal();

  // +1 or -1 with equal probability.
  double Rademacher() { return (NextU64() >> 63) ? 1.0 : -1.0; }

  bool Bernoulli(double p) { return Uniform() < p; }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(Below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Derives an independent stream for a sub-task.
  Rng Fork(std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive seeds from (seed, salt) pairs.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t salt);

// Stable 64-bit digest of a string (FNV-1a followed by a SplitMix64 mix).
std::uint64_t StringSeed(std::string_view text);

}  // namespace hetnas

#endif  // HETNAS_RNG_H_
