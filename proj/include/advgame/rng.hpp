#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace advgame {

// Seeded random stream. Distributions are implemented here rather than with
// <random>'s distribution classes, whose output is implementation-defined;
// every artifact must be reproducible from its seed on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Index drawn from a discrete distribution whose weights sum to ~1.
  std::size_t categorical(std::span<const double> probs);

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      auto j = below(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace advgame
