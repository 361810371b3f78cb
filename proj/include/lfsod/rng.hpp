#pragma once

#include "lfsod/tensor.hpp"

#include <cstdint>
#include <string_view>

namespace lft {

/// Counter-based generator: draw i of a stream with key k is
/// splitmix64_mix(k + (i + 1)·0x9E3779B97F4A7C15). Streams are split by
/// name or index, so every consumer gets its own reproducible sequence
/// regardless of how many values other consumers drew.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  Index uniform_index(Index n);
  bool bernoulli(double p) { return uniform() < p; }

  CounterRng split(std::string_view name) const;
  CounterRng split(std::uint64_t index) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);
std::uint64_t fnv1a64(std::string_view text);

/// Per-scene stream key: global_seed × 1,000,003 + scene_index (mod 2^64).
std::uint64_t scene_seed(std::uint64_t global_seed, std::uint64_t scene_index);

}  // namespace lft
