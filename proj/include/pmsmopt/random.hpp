#pragma once

// Seeded random streams.
//
// All stochastic components draw from Rng, which wraps std::mt19937_64 but
// implements its own uniform/integer/shuffle transforms so that results do
// not depend on the standard library's distribution implementations.
// Independent substreams are derived from a master seed with derive_seed(),
// a counter-based splitmix64 hash, so that the stream used by (generation,
// operator) never depends on how many numbers other streams consumed.

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace pmsmopt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ a) ^ (b * 0xD6E8FEB86659FD93ULL));
}

// Substream tags.
namespace stream {
inline constexpr std::uint64_t kInitialPopulation = 1;
inline constexpr std::uint64_t kSelection = 2;
inline constexpr std::uint64_t kVariation = 3;
inline constexpr std::uint64_t kLhsRound = 4;
inline constexpr std::uint64_t kWeightInit = 5;
inline constexpr std::uint64_t kShuffle = 6;
inline constexpr std::uint64_t kSplit = 7;
}  // namespace stream

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pmsmopt
