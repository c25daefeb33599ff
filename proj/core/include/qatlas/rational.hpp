#pragma once

#include "qatlas/errors.hpp"

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

namespace qatlas {

// Exact rational with 64-bit parts; grid origins and steps must compare exactly,
// so they are never stored as doubles.
class Rational {
public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT: implicit by design
  Rational(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool is_integer() const noexcept { return den_ == 1; }
  bool positive() const noexcept { return num_ > 0; }
  bool zero() const noexcept { return num_ == 0; }

  Rational operator-() const;
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  std::string str() const;

private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

Rational rat(std::int64_t num, std::int64_t den);

// (a - b) / s when the quotient is an exact integer; throws invalid_argument otherwise.
std::int64_t exact_index(const Rational& a, const Rational& b, const Rational& s);

}  // namespace qatlas
