#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sublab {

/// Seeded random source owned by a single rollout or training run.
///
/// Uniform draws are built from the raw 64-bit engine output rather than
/// std::uniform_*_distribution, whose algorithms differ between standard
/// libraries. This keeps curves bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream id (splitmix64 finalizer) so that
/// episode k of run s gets an independent, reproducible generator.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sublab
