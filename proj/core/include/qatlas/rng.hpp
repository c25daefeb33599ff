#pragma once

#include <cstdint>
#include <random>

namespace qatlas {

// mt19937_64 is fully specified by the standard; the distributions here are
// hand-rolled because std::*_distribution output is implementation-defined and
// reruns must be byte-identical across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1): 53 uniform mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Inclusive bounds, unbiased via masked rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Box-Muller, one value per call; the sine branch is discarded deterministically.
  double normal();

  // Independent child stream; derivation depends only on (seed, salt).
  Rng fork(std::uint64_t salt) const;

private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qatlas
