#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace circsq {

using BigInt = boost::multiprecision::cpp_int;

// Exact rational number numerator / 2^exponent.
//
// Canonical form: either the exponent is zero or the numerator is odd, so
// zero is always (0, 0). Numerators that fit in 64 bits are stored inline;
// larger ones spill to a heap-allocated BigInt. Values are immutable from the
// outside and every operation returns a canonical result.
class Dyadic {
 public:
  Dyadic() = default;
  Dyadic(std::int64_t numerator);  // NOLINT: implicit from integers is intended
  Dyadic(std::int64_t numerator, std::uint32_t exponent);
  Dyadic(const BigInt& numerator, std::uint32_t exponent);

  Dyadic(const Dyadic& other);
  Dyadic(Dyadic&& other) noexcept = default;
  Dyadic& operator=(const Dyadic& other);
  Dyadic& operator=(Dyadic&& other) noexcept = default;
  ~Dyadic() = default;

  // Parses the report format "n/2^e" (or a bare integer "n").
  static Dyadic parse(const std::string& text);

  BigInt numerator() const;
  std::uint32_t exponent() const { return exp_; }
  bool is_zero() const { return !big_ && small_ == 0; }
  bool is_integer() const { return exp_ == 0; }
  int sign() const;

  // True when the numerator is held inline.
  bool is_small() const { return !big_; }
  std::int64_t small_numerator() const { return small_; }

  // this * 2^s, exactly.
  Dyadic scale_pow2(std::int64_t s) const;
  // Largest integer <= value.
  BigInt floor() const;
  // floor for non-negative values, ceil for negative ones.
  BigInt floor_toward_zero() const;
  Dyadic abs() const;

  // Integer value; throws InvalidArgument unless integral and within int64.
  std::int64_t to_int64() const;
  double to_double() const;
  // "numerator/2^exponent" in decimal.
  std::string to_string() const;

  Dyadic operator-() const;
  Dyadic& operator+=(const Dyadic& rhs);
  Dyadic& operator-=(const Dyadic& rhs);
  friend Dyadic operator+(Dyadic lhs, const Dyadic& rhs) { return lhs += rhs; }
  friend Dyadic operator-(Dyadic lhs, const Dyadic& rhs) { return lhs -= rhs; }
  friend Dyadic operator*(const Dyadic& lhs, const Dyadic& rhs);

  friend bool operator==(const Dyadic& a, const Dyadic& b);
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);

 private:
  void assign(BigInt numerator, std::uint32_t exponent);
  void assign_wide(__int128 numerator, std::uint32_t exponent);

  std::int64_t small_ = 0;
  std::unique_ptr<BigInt> big_;
  std::uint32_t exp_ = 0;
};

Dyadic add(const Dyadic& a, const Dyadic& b);
Dyadic scale_pow2(const Dyadic& a, std::int64_t s);
BigInt floor_toward_zero(const Dyadic& a);
std::strong_ordering compare(const Dyadic& a, const Dyadic& b);

}  // namespace circsq
