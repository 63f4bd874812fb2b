#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace wrd::num {

// Seeded 64-bit Mersenne Twister. Conversions to floats and bounded integers
// are done here rather than through <random> distributions, whose outputs
// are implementation-defined, so a seed reproduces the same stream
// everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform on {0, ..., n-1}; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via Box-Muller (one sample per call).
  double normal();

  // Independent child stream; depends only on (seed, stream).
  Rng fork(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace wrd::num
