#include "lfsod/rng.hpp"

#include "lfsod/errors.hpp"

namespace lft {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t CounterRng::next_u64() {
  ++counter_;
  return splitmix64_mix(key_ + counter_ * kGamma);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

Index CounterRng::uniform_index(Index n) {
  if (n <= 0) throw ContractError("uniform_index needs a positive bound");
  Index i = static_cast<Index>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

CounterRng CounterRng::split(std::string_view name) const {
  return CounterRng(splitmix64_mix(key_ ^ fnv1a64(name)));
}

CounterRng CounterRng::split(std::uint64_t index) const {
  return CounterRng(splitmix64_mix(key_ ^ splitmix64_mix(index + kGamma)));
}

std::uint64_t scene_seed(std::uint64_t global_seed, std::uint64_t scene_index) {
  return global_seed * 1000003ULL + scene_index;
}

}  // namespace lft
