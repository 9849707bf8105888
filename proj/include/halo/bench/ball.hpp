#pragma once

// Certified enclosures: a dyadic centre with `precision` significant bits and
// a rigorous radius. Used where the exact rational reference exists but is
// too large to materialize (its denominator doubles in length every step).

#include "halo/convert.hpp"
#include "halo/rational.hpp"

#include <climits>
#include <stdexcept>

namespace halo::bench {

class Ball {
 public:
  Ball() = default;

  /// Encloses q with a centre of `precision` significant bits.
  static Ball enclose(const Rational& q, int precision) {
    Ball b;
    b.precision_ = precision;
    b.centre_ = round_centre(q, precision);
    b.radius_ = round_up((q - b.centre_).abs());
    return b;
  }

  const Rational& centre() const { return centre_; }
  const Rational& radius() const { return radius_; }
  int precision() const { return precision_; }

  /// Contains every value of a + b for a in *this, b in o.
  Ball operator+(const Ball& o) const {
    const Rational exact = centre_ + o.centre_;
    return finish(exact, radius_ + o.radius_);
  }

  Ball operator-(const Ball& o) const {
    const Rational exact = centre_ - o.centre_;
    return finish(exact, radius_ + o.radius_);
  }

  Ball operator*(const Ball& o) const {
    const Rational exact = centre_ * o.centre_;
    const Rational spread = centre_.abs() * o.radius_ + o.centre_.abs() * radius_ + radius_ * o.radius_;
    return finish(exact, spread);
  }

  /// Exact scaling by a rational.
  Ball scaled(const Rational& k) const { return finish(centre_ * k, radius_ * k.abs()); }

  /// radius / |centre| as an upper bound; throws if the ball straddles 0.
  Rational relative_radius() const {
    if (centre_.abs() <= radius_) throw std::domain_error("Ball: enclosure contains zero");
    return simplify(radius_ / (centre_.abs() - radius_));
  }

 private:
  static Rational round_centre(const Rational& q, int precision) {
    return round_to_binary(q, precision, INT_MIN / 2, INT_MAX / 2).value;
  }

  // A dyadic upper bound for r >= 0 with 32 significant bits.
  static Rational round_up(const Rational& r) {
    if (r.is_zero()) return r;
    Rational up = round_to_binary(r, 32, INT_MIN / 2, INT_MAX / 2).value;
    if (up < r) {
      const long lsb = static_cast<long>(up.num().bit_width()) - 32 - static_cast<long>(up.den().trailing_zeros());
      up = simplify(up + mul_pow2(Rational(1), lsb));
    }
    return up;
  }

  Ball finish(const Rational& exact, const Rational& spread) const {
    Ball b;
    b.precision_ = precision_;
    b.centre_ = round_centre(exact, precision_);
    b.radius_ = round_up(spread + (exact - b.centre_).abs());
    return b;
  }

  Rational centre_;
  Rational radius_;
  int precision_ = 53;
};

}  // namespace halo::bench
