#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace partmatch {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; derives independent child seeds from (base, stream).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Fills out with a direction drawn uniformly from the unit sphere.
inline void random_unit_vector(Rng& rng, std::span<float> out) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (float& v : out) {
      v = static_cast<float>(normal(rng));
      sq += static_cast<double>(v) * v;
    }
  } while (sq == 0.0);
  const double inv = 1.0 / std::sqrt(sq);
  for (float& v : out) v = static_cast<float>(v * inv);
}

}  // namespace partmatch
