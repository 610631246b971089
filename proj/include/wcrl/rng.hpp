#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>

namespace wcrl {

// splitmix64 finalizer.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and up to two indices
// (cell id, episode id, attempt, ...).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(base) ^ (a + 0x632be59bd9b4e019ULL)) ^
                  (b + 0x2545f4914f6cdd1dULL));
}

// Engine plus the handful of draws the project needs. The draws are written
// out by hand instead of using <random> distributions so that a seed gives
// the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal via Box-Muller.
  double normal();

  // Seed for a child stream; advances this stream by one draw.
  std::uint64_t fork_seed() { return mix_seed(next()); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

}  // namespace wcrl
