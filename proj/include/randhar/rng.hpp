#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Seeded randomness helpers. The engine is std::mt19937_64 (bit-exact across
// platforms); the value transforms below are hand-rolled because the standard
// <random> distributions are implementation-defined, and reproducibility of
// seeded runs is part of this library's contract.
namespace randhar::rng {

using Engine = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; draws two uniforms per value.
inline double gaussian(Engine& engine) {
  const double u1 = 1.0 - uniform01(engine);  // (0, 1], keeps log finite
  const double u2 = uniform01(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t bounded(Engine& engine, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = engine();
  while (r >= limit) r = engine();
  return r % n;
}

// Fisher-Yates shuffle driven by bounded().
template <typename T>
void shuffle(std::vector<T>& values, Engine& engine) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[bounded(engine, i)]);
  }
}

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic seed stream: mixes a base seed with up to two stream indices.
// Used wherever independent sub-seeds are derived (per member, per fold, per
// draw), so that scheduling can never change results.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
  return mix64(mix64(mix64(base) ^ a) ^ b);
}

}  // namespace randhar::rng
