#pragma once

#include <cstdint>
#include <random>

namespace sphin {

// All randomized steps use std::mt19937_64 with explicit bounded draws, so a
// seed reproduces the same mask on any platform (std:: distributions are
// implementation-defined and are avoided on purpose).
using Rng = std::mt19937_64;

// Uniform integer in [0, bound) by rejection sampling (unbiased).
inline std::uint64_t bounded(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound + 1) % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r > limit);
  return r % bound;
}

}  // namespace sphin
