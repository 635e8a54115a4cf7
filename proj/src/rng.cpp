#include "somsam/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "somsam/error.hpp"

namespace somsam {

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw ContractError("uniform_index: empty range");
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  // Largest multiple of n representable in 64 bits, as an exclusive bound.
  const std::uint64_t rem = (kMax % n + 1) % n;
  const std::uint64_t limit = kMax - rem;
  for (;;) {
    const std::uint64_t u = next();
    if (rem == 0 || u < limit + 1) return u % n;
  }
}

double Rng::normal() {
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace somsam
