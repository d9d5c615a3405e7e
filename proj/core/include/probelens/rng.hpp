#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace probelens {

/// Identifies the random stream layout. Bump whenever any draw order or
/// derivation rule changes, since archived corpora are replayed from seeds.
inline constexpr std::string_view kRngVersion = "probelens-rng-v1 (mt19937_64 + splitmix64 derivation)";

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for (stream, index) under `parent`. Pure, so per-iteration or
/// per-layer work can run in any order and still draw the same numbers.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return mix64(mix64(parent ^ mix64(stream)) + index);
}

// Named streams used by derive_seed across the library.
namespace streams {
inline constexpr std::uint64_t kCorpusIteration = 1;
inline constexpr std::uint64_t kMdqaLayout = 2;
inline constexpr std::uint64_t kSplit = 3;
inline constexpr std::uint64_t kProbeLayer = 4;
inline constexpr std::uint64_t kSynthRotation = 5;
inline constexpr std::uint64_t kSynthNoise = 6;
}  // namespace streams

/// Deterministic generator. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the distributions below are written
/// out by hand because the std:: distributions are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return engine_(); }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal via Box-Muller (cosine branch; two draws per call).
  double gaussian();

  /// Fisher-Yates shuffle driven by uniform_below.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace probelens
