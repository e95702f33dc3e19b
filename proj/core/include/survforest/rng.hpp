/*
 * Copyright 2026 The survforest authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef SURVFOREST_RNG_HPP_
#define SURVFOREST_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

namespace survforest {

/// Purpose tags mixed into substream seeds so that independent phases of the
/// pipeline never share a random stream.
enum class RngStream : std::uint64_t {
  kBootstrap = 1,
  kGrowTree = 2,
  kOobRoute = 3,
  kTestRoute = 4,
  kVimpPermute = 5,
  kVimpRoute = 6,
  kGroupedBand = 7,
  kFinalImpute = 8,
  kDependenceRoute = 9,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic random stream. Wraps mt19937_64 but implements its own
/// bounded-integer and unit-interval draws: the standard distribution objects
/// are implementation-defined, and forest reproducibility requires the exact
/// draw sequence to be part of the contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Derives an independent substream from a master seed and a path of
  /// identifiers (stream tag, tree index, row index, ...). The chain is a
  /// splitmix64 fold, so substreams are stable regardless of evaluation
  /// order or thread count.
  static Rng substream(std::uint64_t master,
                       std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = splitmix64(s ^ p);
    return Rng(s);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// First k entries of a uniformly shuffled [0, n) index vector
  /// (partial Fisher-Yates). k must be <= n.
  std::vector<std::uint32_t> sample_indices(std::uint32_t n, std::uint32_t k) {
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::uint32_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::uint32_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace survforest

#endif  // SURVFOREST_RNG_HPP_
