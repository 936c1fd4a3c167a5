/* Copyright 2026 The ragcheck Authors. All Rights Reserved.

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
#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace ragcheck {

// std::mt19937_64 output is fully specified by the standard, but the
// distributions in <random> are not. Everything that has to be reproducible
// across platforms draws through the helpers below instead.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable per-stream seed derivation so parallel work (Monte Carlo trials,
// per-stratum clustering) stays reproducible regardless of schedule.
inline uint64_t derive_seed(uint64_t base_seed, uint64_t stream_id) {
  uint64_t s = base_seed ^ (0x5851f42d4c957f2dULL * (stream_id + 1));
  return splitmix64(s);
}

class Rng {
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 bits of randomness.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n). Rejection sampling keeps it exactly uniform.
  size_t uniform_index(size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const uint64_t span = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<size_t>(x % span);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // First k entries of a uniform random permutation (partial Fisher-Yates).
  template <typename T>
  std::vector<T> sample_without_replacement(std::vector<T> pool, size_t k) {
    if (k > pool.size()) k = pool.size();
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace ragcheck
