#ifndef BIS_RNG_HPP
#define BIS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

/**
 * \file
 * \brief Counter-based random streams.
 *
 * Every draw is a pure function of (seed, stream, counter), so results do not
 * depend on evaluation order or thread layout, and they are identical across
 * standard library implementations (unlike std::normal_distribution).
 */

namespace bis::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed, e.g. one per density model.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
  return splitmix64(derive(seed, stream) ^ splitmix64(counter * 0xD1B54A32D192ED03ULL + 1));
}

/// Uniform in the open interval (0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Sequential view over one (seed, stream) pair.
class Stream {
 public:
  constexpr Stream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_{seed}, stream_{stream} {}

  std::uint64_t next_u64() noexcept { return hash(seed_, stream_, counter_++); }

  double uniform() noexcept { return to_unit(next_u64()); }

  /// Standard normal via Box-Muller; consumes two counters per draw.
  double normal() noexcept {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    // Lemire's multiply-shift; bias is < n / 2^64 which is negligible here.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace bis::rng

#endif  // BIS_RNG_HPP
