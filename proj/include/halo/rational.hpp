#pragma once

// Exact rational numbers with lazy reduction.
//
// Arithmetic never simplifies. A value carries a `reduced` flag that is true
// only when gcd(|num|, den) = 1 is known; simplify() is the only operation that
// sets it. The denominator is always positive, so the sign lives in num.

#include "halo/bigint.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace halo {

struct BitReport {
  std::size_t num_bits = 0;
  std::size_t den_bits = 0;
  std::size_t total_bits = 0;

  /// Width of the wider of the two integer registers.
  std::size_t register_bits() const { return std::max(num_bits, den_bits); }

  friend bool operator==(const BitReport&, const BitReport&) = default;
};

/// Observer for the integer operations a rational op decomposes into.
/// Installed per thread; see integrity::ShadowPipeline.
class ArithmeticObserver {
 public:
  virtual ~ArithmeticObserver() = default;
  virtual void on_add(const BigInt& a, const BigInt& b, const BigInt& c) = 0;
  virtual void on_mul(const BigInt& a, const BigInt& b, const BigInt& c) = 0;
};

namespace detail {
inline ArithmeticObserver*& observer_slot() {
  thread_local ArithmeticObserver* slot = nullptr;
  return slot;
}
}  // namespace detail

/// RAII installation of an observer on the current thread.
class ObserverScope {
 public:
  explicit ObserverScope(ArithmeticObserver& obs) : prev_(detail::observer_slot()) {
    detail::observer_slot() = &obs;
  }
  ~ObserverScope() { detail::observer_slot() = prev_; }
  ObserverScope(const ObserverScope&) = delete;
  ObserverScope& operator=(const ObserverScope&) = delete;

 private:
  ArithmeticObserver* prev_;
};

class Rational {
 public:
  Rational() : num_(0), den_(1), reduced_(true) {}
  Rational(std::int64_t n) : num_(n), den_(1), reduced_(true) {}  // NOLINT(google-explicit-constructor)
  Rational(BigInt n) : num_(std::move(n)), den_(1), reduced_(true) {}  // NOLINT(google-explicit-constructor)

  /// num/den with den != 0; the sign is moved onto num. Not reduced.
  Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)), reduced_(false) {
    if (den_.is_zero()) throw std::domain_error("Rational: zero denominator");
    if (den_.sign() < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    if (num_.is_zero()) {
      den_ = BigInt(1);
      reduced_ = true;
    } else if (den_ == BigInt(1)) {
      reduced_ = true;
    }
  }

  Rational(std::int64_t n, std::int64_t d) : Rational(BigInt(n), BigInt(d)) {}

  /// Parses "n", "n/d" or "-n/d" in decimal. The result is not simplified.
  static Rational parse(std::string_view s) {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return Rational(BigInt::from_string(s));
    return Rational(BigInt::from_string(s.substr(0, slash)),
                    BigInt::from_string(s.substr(slash + 1)));
  }

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }
  bool reduced() const { return reduced_; }

  int sign() const { return num_.sign(); }
  bool is_zero() const { return num_.is_zero(); }
  bool is_integer() const { return den_ == BigInt(1) || is_zero(); }
  bool is_dyadic() const { return den_.is_power_of_two(); }

  BitReport bits() const {
    BitReport r;
    r.num_bits = num_.bit_width();
    r.den_bits = den_.bit_width();
    r.total_bits = r.num_bits + r.den_bits;
    return r;
  }

  std::string to_string() const { return num_.to_string() + "/" + den_.to_string(); }

  Rational operator-() const {
    Rational r = *this;
    r.num_ = -r.num_;
    return r;
  }

  Rational abs() const { return sign() < 0 ? -*this : *this; }

  /// Structural identity: same num, den. Value equality is operator==.
  bool identical(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }

  friend bool operator==(const Rational& a, const Rational& b) {
    if (a.identical(b)) return true;
    return a.num_ * b.den_ == b.num_ * a.den_;
  }

  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    if (a.den_ == b.den_) return a.num_ <=> b.num_;
    return a.num_ * b.den_ <=> b.num_ * a.den_;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& q) {
    return os << q.to_string();
  }

 private:
  friend Rational make_reduced(BigInt n, BigInt d);

  BigInt num_;
  BigInt den_;
  bool reduced_;
};

/// Builds num/den (den > 0) that the caller knows is already in lowest terms.
inline Rational make_reduced(BigInt n, BigInt d) {
  Rational r(std::move(n), std::move(d));
  r.reduced_ = true;
  return r;
}

namespace detail {
inline BigInt observed_mul(const BigInt& a, const BigInt& b) {
  BigInt c = a * b;
  if (auto* obs = observer_slot()) obs->on_mul(a, b, c);
  return c;
}
inline BigInt observed_add(const BigInt& a, const BigInt& b) {
  BigInt c = a + b;
  if (auto* obs = observer_slot()) obs->on_add(a, b, c);
  return c;
}
}  // namespace detail

/// Exact sum. Equal denominators add numerators; denominators that differ
/// only by a power of two are aligned by a shift; a denominator dividing the
/// other is scaled up to it; otherwise n1*d2 + n2*d1 over d1*d2.
inline Rational rat_add(const Rational& a, const Rational& b) {
  using detail::observed_add;
  using detail::observed_mul;
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.den() == b.den()) {
    return Rational(observed_add(a.num(), b.num()), a.den());
  }
  // Denominators sharing an odd part (powers of two included) align by shift.
  const std::size_t ea = a.den().trailing_zeros();
  const std::size_t eb = b.den().trailing_zeros();
  if (a.den().bit_width() - ea == b.den().bit_width() - eb && (a.den() >> ea) == (b.den() >> eb)) {
    if (ea < eb) return Rational(observed_add(a.num() << (eb - ea), b.num()), b.den());
    return Rational(observed_add(a.num(), b.num() << (ea - eb)), a.den());
  }
  if (a.den().bit_width() <= b.den().bit_width()) {
    if (BigInt::divides(a.den(), b.den())) {
      const BigInt m = BigInt::divexact(b.den(), a.den());
      return Rational(observed_add(observed_mul(a.num(), m), b.num()), b.den());
    }
  } else if (BigInt::divides(b.den(), a.den())) {
    const BigInt m = BigInt::divexact(a.den(), b.den());
    return Rational(observed_add(a.num(), observed_mul(b.num(), m)), a.den());
  }
  BigInt n = observed_add(observed_mul(a.num(), b.den()), observed_mul(b.num(), a.den()));
  return Rational(std::move(n), observed_mul(a.den(), b.den()));
}

inline Rational rat_sub(const Rational& a, const Rational& b) { return rat_add(a, -b); }

inline Rational rat_mul(const Rational& a, const Rational& b) {
  if (a.is_zero() || b.is_zero()) return Rational();
  return Rational(detail::observed_mul(a.num(), b.num()), detail::observed_mul(a.den(), b.den()));
}

inline Rational rat_div(const Rational& a, const Rational& b) {
  if (b.is_zero()) throw std::domain_error("rat_div: zero divisor");
  if (a.is_zero()) return Rational();
  return Rational(detail::observed_mul(a.num(), b.den()), detail::observed_mul(a.den(), b.num()));
}

inline Rational operator+(const Rational& a, const Rational& b) { return rat_add(a, b); }
inline Rational operator-(const Rational& a, const Rational& b) { return rat_sub(a, b); }
inline Rational operator*(const Rational& a, const Rational& b) { return rat_mul(a, b); }
inline Rational operator/(const Rational& a, const Rational& b) { return rat_div(a, b); }
inline Rational& operator+=(Rational& a, const Rational& b) { return a = rat_add(a, b); }
inline Rational& operator-=(Rational& a, const Rational& b) { return a = rat_sub(a, b); }
inline Rational& operator*=(Rational& a, const Rational& b) { return a = rat_mul(a, b); }

/// Multiplication by 2^k (k may be negative) without touching odd factors.
inline Rational mul_pow2(const Rational& q, long k) {
  if (q.is_zero() || k == 0) return q;
  if (k > 0) return Rational(q.num() << static_cast<std::size_t>(k), q.den());
  return Rational(q.num(), q.den() << static_cast<std::size_t>(-k));
}

/// Lowest terms via the binary GCD. Never increases total_bits.
inline Rational simplify(const Rational& q) {
  if (q.reduced()) return q;
  // Dyadic denominators only share factors of two with the numerator.
  if (q.den().is_power_of_two()) {
    const std::size_t z = std::min(q.num().trailing_zeros(), q.den().trailing_zeros());
    return make_reduced(q.num() >> z, q.den() >> z);
  }
  const BigInt g = stein_gcd(q.num().abs(), q.den());
  if (g == BigInt(1)) return make_reduced(q.num(), q.den());
  return make_reduced(BigInt::divexact(q.num(), g), BigInt::divexact(q.den(), g));
}

/// floor(q) as an integer.
inline BigInt floor(const Rational& q) { return BigInt::divmod_floor(q.num(), q.den()).first; }

/// Order-independent exact sum, returned in lowest terms; empty sum is 0.
inline Rational sum_exact(std::span<const Rational> values) {
  Rational acc;
  for (const auto& v : values) acc = rat_add(acc, v);
  return simplify(acc);
}

inline Rational sum_exact(const std::vector<Rational>& values) {
  return sum_exact(std::span<const Rational>(values));
}

}  // namespace halo
