#include "circsq/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "circsq/error.hpp"

namespace circsq {
namespace {

constexpr std::int64_t kMin64 = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kMax64 = std::numeric_limits<std::int64_t>::max();

BigInt to_big(__int128 v) {
  const bool neg = v < 0;
  unsigned __int128 mag = neg ? (unsigned __int128)(-(v + 1)) + 1 : (unsigned __int128)v;
  BigInt out = static_cast<std::uint64_t>(mag >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(mag);
  return neg ? BigInt(-out) : out;
}

int ctz128(unsigned __int128 v) {
  const auto lo = static_cast<std::uint64_t>(v);
  if (lo != 0) return __builtin_ctzll(lo);
  return 64 + __builtin_ctzll(static_cast<std::uint64_t>(v >> 64));
}

std::uint32_t checked_exponent(std::int64_t e) {
  if (e < 0 || e > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("dyadic exponent out of range");
  }
  return static_cast<std::uint32_t>(e);
}

}  // namespace

Dyadic::Dyadic(std::int64_t numerator) : small_(numerator) {}

Dyadic::Dyadic(std::int64_t numerator, std::uint32_t exponent) {
  assign_wide(numerator, exponent);
}

Dyadic::Dyadic(const BigInt& numerator, std::uint32_t exponent) {
  assign(numerator, exponent);
}

Dyadic::Dyadic(const Dyadic& other)
    : small_(other.small_),
      big_(other.big_ ? std::make_unique<BigInt>(*other.big_) : nullptr),
      exp_(other.exp_) {}

Dyadic& Dyadic::operator=(const Dyadic& other) {
  if (this != &other) {
    small_ = other.small_;
    big_ = other.big_ ? std::make_unique<BigInt>(*other.big_) : nullptr;
    exp_ = other.exp_;
  }
  return *this;
}

void Dyadic::assign_wide(__int128 n, std::uint32_t e) {
  if (n == 0) {
    small_ = 0;
    big_.reset();
    exp_ = 0;
    return;
  }
  if (e > 0) {
    const unsigned __int128 mag = n < 0 ? (unsigned __int128)(-(n + 1)) + 1 : (unsigned __int128)n;
    const int shift = std::min<int>(ctz128(mag), static_cast<int>(std::min<std::uint32_t>(e, 127)));
    n /= ((__int128)1 << shift);  // exact
    e -= static_cast<std::uint32_t>(shift);
  }
  exp_ = e;
  if (n >= kMin64 && n <= kMax64) {
    small_ = static_cast<std::int64_t>(n);
    big_.reset();
  } else {
    small_ = 0;
    big_ = std::make_unique<BigInt>(to_big(n));
  }
}

void Dyadic::assign(BigInt n, std::uint32_t e) {
  if (n == 0) {
    small_ = 0;
    big_.reset();
    exp_ = 0;
    return;
  }
  if (e > 0) {
    const bool neg = n < 0;
    BigInt mag = neg ? BigInt(-n) : n;
    const auto tz = static_cast<std::uint32_t>(boost::multiprecision::lsb(mag));
    const std::uint32_t shift = std::min(tz, e);
    mag >>= shift;
    e -= shift;
    n = neg ? BigInt(-mag) : mag;
  }
  exp_ = e;
  if (n >= kMin64 && n <= kMax64) {
    small_ = n.convert_to<std::int64_t>();
    big_.reset();
  } else {
    small_ = 0;
    big_ = std::make_unique<BigInt>(std::move(n));
  }
}

Dyadic Dyadic::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return Dyadic(BigInt(text), 0);
    }
    const std::string num = text.substr(0, slash);
    const std::string rest = text.substr(slash + 1);
    if (rest.rfind("2^", 0) != 0) throw InvalidArgument("expected '/2^' in dyadic literal");
    const long long e = std::stoll(rest.substr(2));
    return Dyadic(BigInt(num), checked_exponent(e));
  } catch (const InvalidArgument&) {
    throw;
  } catch (const std::exception&) {
    throw InvalidArgument("malformed dyadic literal '" + text + "'");
  }
}

BigInt Dyadic::numerator() const { return big_ ? *big_ : BigInt(small_); }

int Dyadic::sign() const {
  if (big_) return big_->sign();
  return (small_ > 0) - (small_ < 0);
}

Dyadic Dyadic::scale_pow2(std::int64_t s) const {
  const std::int64_t e = static_cast<std::int64_t>(exp_) - s;
  if (e >= 0) {
    if (is_small()) return Dyadic(small_, checked_exponent(e));
    return Dyadic(*big_, checked_exponent(e));
  }
  BigInt n = numerator();
  n <<= static_cast<unsigned>(-e);
  return Dyadic(n, 0);
}

BigInt Dyadic::floor() const {
  if (exp_ == 0) return numerator();
  if (is_small()) {
    // Arithmetic shift floors toward negative infinity.
    if (exp_ >= 63) return BigInt(small_ < 0 ? -1 : 0);
    return BigInt(small_ >> exp_);
  }
  BigInt div = BigInt(1) << exp_;
  BigInt q = *big_ / div;  // truncates toward zero
  if (*big_ < 0 && q * div != *big_) q -= 1;
  return q;
}

BigInt Dyadic::floor_toward_zero() const {
  if (exp_ == 0) return numerator();
  if (sign() >= 0) return floor();
  return -(-*this).floor();
}

Dyadic Dyadic::abs() const { return sign() < 0 ? -*this : *this; }

std::int64_t Dyadic::to_int64() const {
  if (exp_ != 0 || big_) throw InvalidArgument("dyadic value is not a 64-bit integer: " + to_string());
  return small_;
}

double Dyadic::to_double() const {
  if (is_small()) return std::ldexp(static_cast<double>(small_), -static_cast<int>(exp_));
  return std::ldexp(big_->convert_to<double>(), -static_cast<int>(exp_));
}

std::string Dyadic::to_string() const {
  return numerator().str() + "/2^" + std::to_string(exp_);
}

Dyadic Dyadic::operator-() const {
  Dyadic out;
  if (is_small() && small_ != kMin64) {
    out.small_ = -small_;
    out.exp_ = exp_;
    return out;
  }
  out.assign(-numerator(), exp_);
  return out;
}

Dyadic& Dyadic::operator+=(const Dyadic& rhs) {
  if (rhs.is_zero()) return *this;
  if (is_zero()) return *this = rhs;
  const std::uint32_t e = std::max(exp_, rhs.exp_);
  const std::uint32_t s1 = e - exp_;
  const std::uint32_t s2 = e - rhs.exp_;
  if (is_small() && rhs.is_small() && s1 <= 62 && s2 <= 62) {
    const __int128 a = (__int128)small_ * ((__int128)1 << s1);
    const __int128 b = (__int128)rhs.small_ * ((__int128)1 << s2);
    assign_wide(a + b, e);
    return *this;
  }
  BigInt a = numerator();
  BigInt b = rhs.numerator();
  a <<= s1;
  b <<= s2;
  assign(a + b, e);
  return *this;
}

Dyadic& Dyadic::operator-=(const Dyadic& rhs) { return *this += -rhs; }

Dyadic operator*(const Dyadic& lhs, const Dyadic& rhs) {
  const std::uint32_t e = checked_exponent(static_cast<std::int64_t>(lhs.exp_) + rhs.exp_);
  Dyadic out;
  if (lhs.is_small() && rhs.is_small()) {
    out.assign_wide((__int128)lhs.small_ * rhs.small_, e);
  } else {
    out.assign(lhs.numerator() * rhs.numerator(), e);
  }
  return out;
}

bool operator==(const Dyadic& a, const Dyadic& b) {
  if (a.exp_ != b.exp_) return false;
  if (a.is_small() && b.is_small()) return a.small_ == b.small_;
  return a.numerator() == b.numerator();
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
  if (a.is_small() && b.is_small() && a.exp_ == b.exp_) return a.small_ <=> b.small_;
  const int s = (a - b).sign();
  return s < 0 ? std::strong_ordering::less
               : (s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

Dyadic add(const Dyadic& a, const Dyadic& b) { return a + b; }
Dyadic scale_pow2(const Dyadic& a, std::int64_t s) { return a.scale_pow2(s); }
BigInt floor_toward_zero(const Dyadic& a) { return a.floor_toward_zero(); }
std::strong_ordering compare(const Dyadic& a, const Dyadic& b) { return a <=> b; }

}  // namespace circsq
