#include "halo/convert.hpp"
#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <mpfr.h>

#include <cmath>
#include <limits>

using halo::BigInt;
using halo::Rational;
using halo::test::Gen;

namespace {

// Correctly rounded value of q in a binary format with p bits, minimum normal
// exponent emin and maximum exponent emax, via MPFR with subnormalization.
double oracle_round(const Rational& q, int p, int emin, int emax) {
  const mpfr_exp_t old_min = mpfr_get_emin(), old_max = mpfr_get_emax();
  // MPFR significands are in [1/2, 1): shift exponents by one.
  mpfr_set_emin(emin - p + 2);
  mpfr_set_emax(emax + 1);
  mpq_t mq;
  mpq_init(mq);
  mpz_set(mpq_numref(mq), q.num().raw().get_mpz_t());
  mpz_set(mpq_denref(mq), q.den().raw().get_mpz_t());
  mpq_canonicalize(mq);
  mpfr_t x;
  mpfr_init2(x, p);
  int t = mpfr_set_q(x, mq, MPFR_RNDN);
  t = mpfr_check_range(x, t, MPFR_RNDN);
  mpfr_subnormalize(x, t, MPFR_RNDN);
  const double d = mpfr_get_d(x, MPFR_RNDN);
  mpfr_clear(x);
  mpq_clear(mq);
  mpfr_set_emin(old_min);
  mpfr_set_emax(old_max);
  return d;
}

}  // namespace

TEST(Convert, LiftExamples) {
  EXPECT_TRUE(halo::to_rational(0.75, 16).value.identical(Rational(3, 4)));
  EXPECT_FALSE(halo::to_rational(0.75, 16).inexact);
  const auto third = halo::to_rational(1.0 / 3.0, 4);
  EXPECT_TRUE(third.inexact);
  EXPECT_EQ(third.value, Rational(5, 16));  // 16/3 = 5.33 rounds to 5
  EXPECT_EQ(halo::to_rational(2.5 / 16, 4).value, Rational(2, 16));  // tie to even
  EXPECT_EQ(halo::to_rational(3.5 / 16, 4).value, Rational(4, 16));
  EXPECT_EQ(halo::to_rational(-3.5 / 16, 4).value, Rational(-4, 16));
  EXPECT_THROW(halo::to_rational(std::nan(""), 4), std::domain_error);
  EXPECT_THROW(halo::to_rational(INFINITY, 4), std::domain_error);
}

TEST(Convert, CollapseExamples) {
  EXPECT_EQ(halo::to_float(Rational(1, 3)), 1.0 / 3.0);
  EXPECT_EQ(halo::to_float(Rational(-2, 3)), -2.0 / 3.0);
  EXPECT_EQ(halo::to_float(Rational(1, 10)), 0.1);
  EXPECT_TRUE(std::signbit(halo::to_float(Rational())) == false);
  const auto big = halo::to_float_checked(Rational(BigInt::pow2(1100)));
  EXPECT_TRUE(big.overflow);
  EXPECT_EQ(big.value, INFINITY);
  EXPECT_EQ(halo::to_float(Rational(BigInt(-1), BigInt::pow2(1080))), -0.0);
  EXPECT_EQ(halo::to_float(Rational(BigInt(1), BigInt::pow2(1074))), std::numeric_limits<double>::denorm_min());
  // Just above half the smallest subnormal rounds up to it.
  EXPECT_EQ(halo::to_float(Rational(BigInt::pow2(1000) + BigInt(1), BigInt::pow2(2075))),
            std::numeric_limits<double>::denorm_min());
  EXPECT_EQ(halo::to_float(Rational(BigInt(1), BigInt::pow2(1075))), 0.0);  // exact tie to even zero
}

TEST(ConvertProperty, DoubleRoundTripIsExact) {
  Gen g(11);
  for (int i = 0; i < 20000; ++i) {
    const double x = g.finite_double();
    const Rational q = halo::from_double_exact(x);
    ASSERT_TRUE(q.reduced());
    ASSERT_TRUE(q.is_dyadic());
    const double back = halo::to_float(q);
    ASSERT_EQ(back, x) << x;
  }
}

TEST(ConvertProperty, CollapseMatchesMpfr) {
  Gen g(12);
  for (int i = 0; i < 20000; ++i) {
    Rational q = g.rational(1 + g.below(200));
    if (g.coin()) q = halo::mul_pow2(q, g.range(-1100, 1000));
    const auto c = halo::to_float_checked(q);
    const double o = oracle_round(q, 53, -1022, 1023);
    ASSERT_EQ(c.overflow, std::isinf(o)) << q;
    ASSERT_EQ(c.value, o) << q;
  }
}

TEST(ConvertProperty, RoundToBinaryMatchesMpfrForFp32AndBf16) {
  Gen g(13);
  for (int i = 0; i < 20000; ++i) {
    Rational q = g.rational(1 + g.below(80));
    if (g.coin()) q = halo::mul_pow2(q, g.range(-160, 140));
    for (int p : {8, 24}) {
      const auto r = halo::round_to_binary(q, p, -126, 127);
      const double o = oracle_round(q, p, -126, 127);
      ASSERT_EQ(r.overflow, std::isinf(o)) << q << " p=" << p;
      if (!r.overflow) ASSERT_EQ(halo::to_float(r.value), o) << q << " p=" << p;
    }
  }
}

TEST(ConvertProperty, LiftErrorIsAtMostHalfUlpOfScale) {
  Gen g(14);
  for (int i = 0; i < 5000; ++i) {
    const double x = g.real(-1e6, 1e6);
    const unsigned s = static_cast<unsigned>(g.below(40));
    const auto l = halo::to_rational(x, s);
    const Rational err = (l.value - halo::from_double_exact(x)).abs();
    ASSERT_LE(err, Rational(BigInt(1), BigInt::pow2(s + 1)));
    ASSERT_EQ(l.inexact, !err.is_zero());
    ASSERT_TRUE(halo::BigInt::divides(l.value.den(), BigInt::pow2(s)));
  }
}
