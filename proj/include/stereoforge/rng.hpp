#pragma once

#include <cstdint>
#include <random>

namespace stereoforge {

/// Explicit random state passed to every stochastic operation.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The mappings to reals and bounded integers are written out here
/// rather than delegated to <random> distributions, whose algorithms vary
/// between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi]; returns lo when lo == hi.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer on [0, n). n must be >= 1.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform integer on [lo, hi] inclusive.
  int between(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-item seed that depends only on (global seed, item index), so parallel
/// schedules reproduce serial output.
constexpr std::uint64_t stable_seed(std::uint64_t global_seed, std::uint64_t index) noexcept {
  return mix64(mix64(global_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace stereoforge
