#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ivtrial {

/// SplitMix64 (Steele, Lea, Flood 2014). Small state, full period 2^64, and
/// its output function doubles as the seed mixer below.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// The SplitMix64 finalizer: a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream ids. Changing any of these changes every simulated dataset.
enum class Stream : std::uint64_t {
  data = 1,       // per-replication dataset seed
  bootstrap = 2,  // per-replication bootstrap seed
  guard = 3,      // interaction-strength guard resamples
  subject = 4,    // per-subject generator inside one dataset
};

/// seed -> (index, stream) derivation. Each step folds one word in with a
/// golden-ratio offset and re-mixes, so neighbouring indices land far apart.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, Stream stream) noexcept {
  std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (index + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ (static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
  return h;
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& g) noexcept { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Box-Muller, cosine branch only, so each call consumes exactly two words.
inline double standard_normal(SplitMix64& g) noexcept {
  const double u1 = 1.0 - uniform01(g);  // (0, 1]
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline bool bernoulli(SplitMix64& g, double p) noexcept { return uniform01(g) < p; }

__extension__ using uint128 = unsigned __int128;

/// Uniform integer in [0, bound), bound > 0. Lemire's multiply-and-reject.
inline std::uint64_t uniform_below(SplitMix64& g, std::uint64_t bound) noexcept {
  uint128 m = static_cast<uint128>(g()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<uint128>(g()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace ivtrial
