#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>

namespace rlscale {

__extension__ using uint128_t = unsigned __int128;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combine a seed with a list of stream coordinates into one stream key.
constexpr std::uint64_t stream_key(std::uint64_t seed) noexcept { return mix64(seed); }

template <typename... Rest>
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t first, Rest... rest) noexcept {
  return stream_key(mix64(seed ^ (first + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2))),
                    static_cast<std::uint64_t>(rest)...);
}

/// Counter-based generator: the i-th output of stream `key` is mix64(key + (i+1)·γ).
///
/// Outputs depend only on (key, counter), so independent substreams are obtained by
/// deriving keys with stream_key(seed, coordinates...) and results never depend on
/// execution order. Satisfies UniformRandomBitGenerator, but the helpers below are
/// used for sampling so that draws are identical across standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr const char* kName = "splitmix64-counter";

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be > 0. Lemire's multiply-shift with rejection.
  std::size_t index(std::size_t n) noexcept {
    const auto bound = static_cast<std::uint64_t>(n);
    uint128_t m = static_cast<uint128_t>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<uint128_t>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  /// Standard normal via Box-Muller (one draw per call; the pair's sine half is discarded).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rlscale
