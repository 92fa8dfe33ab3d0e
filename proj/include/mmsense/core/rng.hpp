#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace mmsense {

namespace detail {

// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

/// Splittable counter-based generator.
///
/// Draw i of a stream with key k is `mix64(k + (i + 1) * 0x9E3779B97F4A7C15)`,
/// i.e. the SplitMix64 sequence seeded with k. A child stream has key
/// `mix64(k ^ mix64(tag + 0x632BE59BD9B4E019))`. Every value is a pure function
/// of (key, counter), so results do not depend on platform distributions and a
/// stream can be checkpointed as two integers.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  constexpr explicit CounterRng(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
      : key_(seed), counter_(counter) {}

  [[nodiscard]] constexpr CounterRng split(std::uint64_t tag) const noexcept {
    return CounterRng(detail::mix64(key_ ^ detail::mix64(tag + 0x632BE59BD9B4E019ULL)));
  }
  [[nodiscard]] constexpr CounterRng split(std::string_view tag) const noexcept {
    return split(detail::fnv1a(tag));
  }

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

  /// Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

  friend constexpr bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// In-place Fisher-Yates shuffle driven by a CounterRng.
template <class Range>
void shuffle(Range& r, CounterRng& rng) {
  using std::swap;
  const auto n = static_cast<std::uint64_t>(std::size(r));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = rng.below(i);
    swap(r[i - 1], r[j]);
  }
}

}  // namespace mmsense
