#pragma once

// Arbitrary-precision signed integer used by the exact datapath.
//
// Storage is delegated to GMP; the limb size of the host never leaks through
// this interface. All contracts are stated on values and bit counts.

#include <gmpxx.h>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace halo {

class BigInt {
 public:
  BigInt() = default;
  BigInt(std::int64_t v) { set_i64(v); }  // NOLINT(google-explicit-constructor)
  explicit BigInt(mpz_class v) : v_(std::move(v)) {}

  static BigInt from_string(std::string_view s) {
    BigInt r;
    if (r.v_.set_str(std::string(s), 10) != 0) {
      throw std::invalid_argument("BigInt: not a decimal integer: " + std::string(s));
    }
    return r;
  }

  static BigInt pow2(std::size_t k) {
    BigInt r;
    mpz_setbit(r.v_.get_mpz_t(), k);
    return r;
  }

  int sign() const { return mpz_sgn(v_.get_mpz_t()); }
  bool is_zero() const { return sign() == 0; }
  bool is_odd() const { return mpz_odd_p(v_.get_mpz_t()) != 0; }
  bool is_even() const { return !is_odd(); }

  /// Position of the highest set bit of |x| plus one; 0 for zero.
  std::size_t bit_width() const {
    if (is_zero()) return 0;
    return mpz_sizeinbase(v_.get_mpz_t(), 2);
  }

  /// Number of trailing zero bits of |x|; 0 for zero.
  std::size_t trailing_zeros() const {
    if (is_zero()) return 0;
    return mpz_scan1(v_.get_mpz_t(), 0);
  }

  bool is_power_of_two() const {
    return sign() > 0 && trailing_zeros() + 1 == bit_width();
  }

  bool test_bit(std::size_t k) const { return mpz_tstbit(v_.get_mpz_t(), k) != 0; }

  BigInt abs() const {
    BigInt r;
    mpz_abs(r.v_.get_mpz_t(), v_.get_mpz_t());
    return r;
  }

  /// Toggle bit k of the magnitude, keeping the sign.
  BigInt flip_bit(std::size_t k) const {
    BigInt r = abs();
    mpz_combit(r.v_.get_mpz_t(), k);
    if (sign() < 0) r = -r;
    return r;
  }

  bool fits_i64() const { return mpz_fits_slong_p(v_.get_mpz_t()) != 0 && sizeof(long) == 8; }
  std::int64_t to_i64() const {
    if (!fits_i64()) throw std::overflow_error("BigInt: value does not fit in int64");
    return static_cast<std::int64_t>(mpz_get_si(v_.get_mpz_t()));
  }

  /// Truncating conversion; only used for diagnostics and seeds.
  double to_double_trunc() const { return mpz_get_d(v_.get_mpz_t()); }

  std::string to_string() const { return v_.get_str(10); }

  /// Magnitude as little-endian 64-bit words (fixed external base).
  std::vector<std::uint64_t> magnitude_words() const {
    std::vector<std::uint64_t> out((bit_width() + 63) / 64);
    std::size_t count = 0;
    if (!out.empty()) {
      mpz_export(out.data(), &count, -1, sizeof(std::uint64_t), 0, 0, v_.get_mpz_t());
    }
    out.resize(count);
    return out;
  }

  // Arithmetic ---------------------------------------------------------------

  BigInt& operator+=(const BigInt& o) { v_ += o.v_; return *this; }
  BigInt& operator-=(const BigInt& o) { v_ -= o.v_; return *this; }
  BigInt& operator*=(const BigInt& o) { v_ *= o.v_; return *this; }
  BigInt& operator<<=(std::size_t k) {
    mpz_mul_2exp(v_.get_mpz_t(), v_.get_mpz_t(), k);
    return *this;
  }
  /// Arithmetic shift of the magnitude (truncates toward zero).
  BigInt& operator>>=(std::size_t k) {
    mpz_tdiv_q_2exp(v_.get_mpz_t(), v_.get_mpz_t(), k);
    return *this;
  }

  friend BigInt operator+(BigInt a, const BigInt& b) { return a += b; }
  friend BigInt operator-(BigInt a, const BigInt& b) { return a -= b; }
  friend BigInt operator*(BigInt a, const BigInt& b) { return a *= b; }
  friend BigInt operator<<(BigInt a, std::size_t k) { return a <<= k; }
  friend BigInt operator>>(BigInt a, std::size_t k) { return a >>= k; }
  friend BigInt operator-(BigInt a) {
    mpz_neg(a.v_.get_mpz_t(), a.v_.get_mpz_t());
    return a;
  }

  /// Floor division and remainder (remainder has the divisor's sign).
  static std::pair<BigInt, BigInt> divmod_floor(const BigInt& a, const BigInt& b) {
    if (b.is_zero()) throw std::domain_error("BigInt: division by zero");
    BigInt q, r;
    mpz_fdiv_qr(q.v_.get_mpz_t(), r.v_.get_mpz_t(), a.v_.get_mpz_t(), b.v_.get_mpz_t());
    return {q, r};
  }

  /// Exact division; b must divide a.
  static BigInt divexact(const BigInt& a, const BigInt& b) {
    BigInt q;
    mpz_divexact(q.v_.get_mpz_t(), a.v_.get_mpz_t(), b.v_.get_mpz_t());
    return q;
  }

  /// True when d divides a (d != 0).
  static bool divides(const BigInt& d, const BigInt& a) {
    return mpz_divisible_p(a.v_.get_mpz_t(), d.v_.get_mpz_t()) != 0;
  }

  static BigInt pow(const BigInt& base, unsigned long e) {
    BigInt r;
    mpz_pow_ui(r.v_.get_mpz_t(), base.v_.get_mpz_t(), e);
    return r;
  }

  /// Library GCD (subquadratic); used where only the result matters.
  static BigInt library_gcd(const BigInt& a, const BigInt& b) {
    BigInt r;
    mpz_gcd(r.v_.get_mpz_t(), a.v_.get_mpz_t(), b.v_.get_mpz_t());
    return r;
  }

  friend bool operator==(const BigInt& a, const BigInt& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const BigInt& a, const BigInt& b) {
    const int c = cmp(a.v_, b.v_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  const mpz_class& raw() const { return v_; }
  mpz_class& raw() { return v_; }

 private:
  void set_i64(std::int64_t v) {
    if (v >= 0) {
      mpz_import(v_.get_mpz_t(), 1, -1, sizeof(std::uint64_t), 0, 0, &v);
    } else {
      const std::uint64_t m = ~static_cast<std::uint64_t>(v) + 1;
      mpz_import(v_.get_mpz_t(), 1, -1, sizeof(std::uint64_t), 0, 0, &m);
      mpz_neg(v_.get_mpz_t(), v_.get_mpz_t());
    }
  }

  mpz_class v_;
};

/// Binary GCD (Stein). Uses only parity tests, shifts and subtraction.
/// Requires u, v >= 0; gcd(0, v) = v.
inline BigInt stein_gcd(BigInt u, BigInt v) {
  if (u.sign() < 0 || v.sign() < 0) throw std::domain_error("stein_gcd: negative operand");
  if (u.is_zero()) return v;
  if (v.is_zero()) return u;

  const std::size_t zu = u.trailing_zeros();
  const std::size_t zv = v.trailing_zeros();
  const std::size_t common = zu < zv ? zu : zv;
  u >>= zu;
  v >>= zv;

  // Both odd from here on.
  mpz_ptr pu = u.raw().get_mpz_t();
  mpz_ptr pv = v.raw().get_mpz_t();
  for (;;) {
    if (mpz_cmp(pu, pv) > 0) mpz_swap(pu, pv);
    mpz_sub(pv, pv, pu);
    if (mpz_sgn(pv) == 0) break;
    mpz_tdiv_q_2exp(pv, pv, mpz_scan1(pv, 0));
  }
  u <<= common;
  return u;
}

}  // namespace halo
