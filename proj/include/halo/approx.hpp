#pragma once

// Bounded-denominator rational approximation.

#include "halo/rational.hpp"

#include <stdexcept>
#include <utility>

namespace halo {

struct Approximation {
  Rational value;               // in lowest terms
  bool tolerance_miss = false;  // no q with den <= d_max lies within eps
};

namespace detail {

/// Tie rule: smaller denominator, then smaller |q - x|, then smaller q.
inline bool better_candidate(const Rational& cand, const Rational& best, const Rational& x) {
  if (cand.den() != best.den()) return cand.den() < best.den();
  const Rational dc = (cand - x).abs();
  const Rational db = (best - x).abs();
  if (dc != db) return dc < db;
  return cand < best;
}

/// The integer in [lo, hi] closest to x (ties toward the smaller); lo <= x <= hi,
/// and the interval must contain an integer.
inline Rational nearest_integer_in(const Rational& lo, const Rational& hi, const Rational& x) {
  BigInt fx = floor(x);
  Rational below(fx);
  Rational above(fx + BigInt(1));
  const bool below_ok = below >= lo;
  const bool above_ok = above <= hi;
  if (x.is_integer()) return Rational(x.num());
  if (below_ok && above_ok) {
    return (above - x) < (x - below) ? above : below;
  }
  return below_ok ? below : above;
}

/// Simplest rational (minimal denominator) in the closed interval [lo, hi],
/// 0 < lo <= hi, containing no integer. Stern–Brocot descent with run-length
/// acceleration: each loop iteration consumes one partial quotient.
inline Rational simplest_between_positive(Rational lo, Rational hi) {
  // Convergent matrix [[p1, p0], [q1, q0]] tracks the path from the root.
  BigInt p0(0), q0(1), p1(1), q1(0);
  for (;;) {
    const BigInt a = floor(lo);
    // Integer in [lo, hi]?
    const Rational ceil_lo = lo.is_integer() ? lo : Rational(a + BigInt(1));
    if (ceil_lo <= hi) {
      const BigInt& c = ceil_lo.num();
      return simplify(Rational(c * p1 + p0, c * q1 + q0));
    }
    BigInt p2 = a * p1 + p0;
    BigInt q2 = a * q1 + q0;
    p0 = std::move(p1);
    q0 = std::move(q1);
    p1 = std::move(p2);
    q1 = std::move(q2);
    const Rational frac_lo = lo - Rational(a);
    const Rational frac_hi = hi - Rational(a);
    lo = simplify(Rational(frac_hi.den(), frac_hi.num()));
    hi = simplify(Rational(frac_lo.den(), frac_lo.num()));
  }
}

inline Rational simplest_in(const Rational& lo, const Rational& hi, const Rational& x) {
  const Rational c = lo.is_integer() ? Rational(lo.num()) : Rational(floor(lo) + BigInt(1));
  if (c <= hi) return nearest_integer_in(lo, hi, x);
  if (hi.sign() < 0) return -simplest_between_positive(simplify(-hi), simplify(-lo));
  return simplest_between_positive(simplify(lo), simplify(hi));
}

}  // namespace detail

/// Closest rational to x with denominator <= d_max (ties: smaller
/// denominator, then smaller value). Continued-fraction semiconvergents.
inline Rational best_approximation(const Rational& x_in, const BigInt& d_max) {
  if (d_max.sign() <= 0) throw std::invalid_argument("best_approximation: d_max must be >= 1");
  const Rational x = simplify(x_in);
  if (x.den() <= d_max) return x;

  BigInt p0(0), q0(1), p1(1), q1(0);
  BigInt n = x.num();
  BigInt d = x.den();
  for (;;) {
    auto [a, r] = BigInt::divmod_floor(n, d);
    BigInt q2 = q0 + a * q1;
    if (q2 > d_max) break;
    BigInt p2 = p0 + a * p1;
    p0 = std::move(p1);
    q0 = std::move(q1);
    p1 = std::move(p2);
    q1 = std::move(q2);
    n = std::move(d);
    d = std::move(r);
  }
  const BigInt k = BigInt::divmod_floor(d_max - q0, q1).first;
  const Rational semi = simplify(Rational(p0 + k * p1, q0 + k * q1));
  const Rational conv = simplify(Rational(p1, q1));
  const Rational ds = (semi - x).abs();
  const Rational dc = (conv - x).abs();
  if (ds < dc) return semi;
  if (dc < ds) return conv;
  return detail::better_candidate(semi, conv, x) ? semi : conv;
}

/// The rational with the smallest denominator within eps of x, provided that
/// denominator is <= d_max. Otherwise the closest rational with denominator
/// <= d_max, flagged as a tolerance miss.
inline Approximation rational_approx(const Rational& x, const Rational& eps, const BigInt& d_max) {
  if (eps.sign() <= 0) throw std::invalid_argument("rational_approx: eps must be > 0");
  if (d_max.sign() <= 0) throw std::invalid_argument("rational_approx: d_max must be >= 1");
  const Rational xs = simplify(x);
  const Rational lo = simplify(xs - eps);
  const Rational hi = simplify(xs + eps);
  Rational q = detail::simplest_in(lo, hi, xs);
  if (q.den() <= d_max) return {simplify(q), false};
  return {best_approximation(xs, d_max), true};
}

inline Approximation rational_approx(const Rational& x, const Rational& eps, std::int64_t d_max) {
  return rational_approx(x, eps, BigInt(d_max));
}

}  // namespace halo
