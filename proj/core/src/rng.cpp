#include "qatlas/rng.hpp"

#include "qatlas/errors.hpp"

#include <cmath>
#include <numbers>

namespace qatlas {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  require(lo <= hi, Errc::invalid_argument, "uniform_int with lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == ~0ULL) return static_cast<std::int64_t>(next_u64());
  const std::uint64_t n = span + 1;
  std::uint64_t mask = ~0ULL;
  const int bits = 64 - __builtin_clzll(n | 1);
  if (bits < 64) mask = (1ULL << bits) - 1;
  for (;;) {
    const std::uint64_t v = next_u64() & mask;
    if (v < n) return lo + static_cast<std::int64_t>(v);
  }
}

double Rng::normal() {
  // u1 in (0,1] keeps the log finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::uint64_t salt) const {
  return Rng(splitmix64(seed_ ^ splitmix64(salt + 0x51ed2700a1b4e9d3ULL)));
}

}  // namespace qatlas
