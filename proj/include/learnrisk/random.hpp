#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace learnrisk {

// std::mt19937_64's output sequence is fixed by the standard, but the
// <random> distributions are not. These helpers keep sampled indices and
// shuffles identical across standard library implementations.
using Rng = std::mt19937_64;

// Uniform integer in [0, n). n must be positive.
inline std::uint64_t UniformBelow(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n + 1) % n;
  std::uint64_t draw = rng();
  while (draw > limit) draw = rng();
  return draw % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void Shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = UniformBelow(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

// Derives an independent stream for a sub-task from a base seed.
inline std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace learnrisk
