#pragma once

// Conversions between binary floating point and exact rationals.

#include "halo/rational.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace halo {

struct Lifted {
  Rational value;
  bool inexact = false;  // x*S was not an integer and had to be rounded
};

/// Lift x to Q with scale S = 2^scale_bits: n = round_half_even(x*S), d = S.
/// Exact whenever x*S is an integer. The result is simplified.
inline Lifted to_rational(double x, unsigned scale_bits) {
  if (!std::isfinite(x)) throw std::domain_error("to_rational: non-finite input");
  if (x == 0.0) return {Rational(), false};

  int e = 0;
  const double m = std::frexp(std::fabs(x), &e);  // |x| = m * 2^e, m in [0.5, 1)
  const auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  const long shift = static_cast<long>(e) - 53 + static_cast<long>(scale_bits);

  BigInt n(mant);
  bool inexact = false;
  if (shift >= 0) {
    n <<= static_cast<std::size_t>(shift);
  } else {
    const auto drop = static_cast<std::size_t>(-shift);
    BigInt q = n >> drop;
    const BigInt rem = n - (q << drop);
    if (!rem.is_zero()) {
      inexact = true;
      const BigInt half = BigInt::pow2(drop - 1);
      if (rem > half || (rem == half && q.is_odd())) q += BigInt(1);
    }
    n = std::move(q);
  }
  if (x < 0) n = -n;
  return {simplify(Rational(std::move(n), BigInt::pow2(scale_bits))), inexact};
}

/// The exact dyadic value of a finite double.
inline Rational from_double_exact(double x) { return to_rational(x, 1074).value; }

struct Rounded {
  Rational value;        // representable value (meaningless if overflow)
  bool overflow = false;
};

/// Round q to a binary format with p significand bits (hidden bit included),
/// minimum normal exponent emin and maximum exponent emax, round-half-even,
/// with gradual underflow.
inline Rounded round_to_binary(const Rational& q, int p, int emin, int emax) {
  if (q.is_zero()) return {Rational(), false};
  const BigInt a = q.num().abs();
  const BigInt& b = q.den();

  // e = floor(log2(a/b))
  long e = static_cast<long>(a.bit_width()) - static_cast<long>(b.bit_width());
  const bool below = e >= 0 ? a < (b << static_cast<std::size_t>(e))
                            : (a << static_cast<std::size_t>(-e)) < b;
  if (below) --e;
  if (e > emax) return {Rational(), true};

  const long lsb = std::max(e, static_cast<long>(emin)) - (p - 1);
  BigInt scaled_a = a;
  BigInt scaled_b = b;
  if (lsb < 0) scaled_a <<= static_cast<std::size_t>(-lsb);
  else scaled_b <<= static_cast<std::size_t>(lsb);
  auto [quot, rem] = BigInt::divmod_floor(scaled_a, scaled_b);
  const BigInt twice = rem << 1;
  if (twice > scaled_b || (twice == scaled_b && quot.is_odd())) quot += BigInt(1);

  // Rounding may carry into the next binade.
  if (quot.bit_width() > static_cast<std::size_t>(p) && lsb + p > emax) return {Rational(), true};

  if (q.sign() < 0) quot = -quot;
  return {simplify(mul_pow2(Rational(std::move(quot)), lsb)), false};
}

struct Collapsed {
  double value = 0.0;
  bool overflow = false;
};

/// Round-to-nearest-even collapse of q to double; overflow gives signed infinity.
inline Collapsed to_float_checked(const Rational& q) {
  const Rounded r = round_to_binary(q, 53, -1022, 1023);
  if (r.overflow) {
    return {q.sign() < 0 ? -HUGE_VAL : HUGE_VAL, true};
  }
  if (r.value.is_zero()) return {q.sign() < 0 ? -0.0 : 0.0, false};
  // value = m / 2^k or m * 1 with |m| <= 2^53, exact in double.
  const Rational& v = r.value;
  const double m = v.num().to_double_trunc();
  const long k = static_cast<long>(v.den().trailing_zeros());
  return {std::ldexp(m, static_cast<int>(-k)), false};
}

inline double to_float(const Rational& q) { return to_float_checked(q).value; }

}  // namespace halo
