#pragma once

// Portable seeded randomness.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Everything layered on top (bounded integers, reals, normals,
// shuffling) is implemented here rather than with <random> distributions,
// whose algorithms vary between standard libraries:
//
//   uniform_index(n)  rejection sampling: draw u until u < 2^64 - (2^64 mod n),
//                     return u mod n.
//   uniform01()       (u >> 11) * 2^-53, in [0, 1).
//   normal()          Box-Muller, one value per call: u1 = 1 - uniform01(),
//                     u2 = uniform01(), sqrt(-2 ln u1) * cos(2 pi u2).
//   shuffle(v)        Fisher-Yates, i = n-1 down to 1, swap(v[i], v[uniform_index(i+1)]).
//
// Derived seeds use mix_seed(seed, stream) = splitmix64(seed ^ splitmix64(stream)),
// where splitmix64 is the finalizer of Steele et al.'s SplitMix64.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace somsam {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(seed ^ splitmix64(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be nonzero.
  std::uint64_t uniform_index(std::uint64_t n);

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double normal();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      using std::swap;
      swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace somsam
