#pragma once

// Rational-closed exp, softmax, inverse square root, LayerNorm and ReLU.
// Every output is an exact rational; accuracy is traded against the Taylor
// order and the Newton–Raphson tolerance.

#include "halo/convert.hpp"
#include "halo/rational.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace halo {

struct TranscendConfig {
  unsigned taylor_order = 8;
  Rational nr_tolerance = Rational(BigInt(1), BigInt::pow(BigInt(10), 30));
  unsigned nr_max_iters = 64;
  Rational layernorm_epsilon = Rational(BigInt(1), BigInt::pow(BigInt(10), 5));

  void validate() const {
    if (taylor_order < 1) throw std::invalid_argument("TranscendConfig: taylor_order must be >= 1");
    if (nr_max_iters < 1) throw std::invalid_argument("TranscendConfig: nr_max_iters must be >= 1");
    if (nr_tolerance.sign() <= 0) throw std::invalid_argument("TranscendConfig: nr_tolerance must be > 0");
    if (layernorm_epsilon.sign() < 0) throw std::invalid_argument("TranscendConfig: layernorm_epsilon must be >= 0");
  }
};

class SeriesUnderflow : public std::domain_error {
 public:
  explicit SeriesUnderflow(std::size_t index)
      : std::domain_error("rat_softmax: truncated exp series is <= 0 at index " +
                          std::to_string(index)),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// sum_{k=0}^{N} x^k / k!, as one fraction over den(x)^N * N!.
inline Rational rat_exp(const Rational& x, unsigned order) {
  if (x.is_zero()) return Rational(1);
  const BigInt& p = x.num();
  const BigInt& q = x.den();
  // Horner in k: acc_k = acc_{k+1} * p * ... ; coefficients N!/k! are integers.
  // num = sum_k (N!/k!) p^k q^(N-k)
  BigInt num(0);
  BigInt coeff(1);     // N!/k! for k = N
  BigInt p_pow = BigInt::pow(p, order);
  BigInt q_pow(1);
  for (unsigned k = order + 1; k-- > 0;) {
    num += coeff * p_pow * q_pow;
    if (k == 0) break;
    coeff *= BigInt(static_cast<std::int64_t>(k));
    q_pow *= q;
    p_pow = BigInt::divexact(p_pow, p);
  }
  // coeff == N!, q_pow == q^N
  return Rational(std::move(num), coeff * q_pow);
}

/// Row softmax with Taylor exponentials. Inputs are max-shifted first; the
/// components share one denominator and sum to exactly 1. Components are
/// returned in lowest terms.
inline std::vector<Rational> rat_softmax(std::span<const Rational> z, unsigned order) {
  if (z.empty()) return {};
  Rational zmax = z[0];
  for (const auto& v : z) {
    if (v > zmax) zmax = v;
  }
  std::vector<Rational> e;
  e.reserve(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    Rational ei = rat_exp(z[i] - zmax, order);
    if (ei.sign() <= 0) throw SeriesUnderflow(i);
    e.push_back(std::move(ei));
  }

  // Bring every e_i over a common denominator: a_i / D.
  bool shared = true;
  for (const auto& v : e) shared = shared && v.den() == e[0].den();
  std::vector<BigInt> a(e.size());
  if (shared) {
    for (std::size_t i = 0; i < e.size(); ++i) a[i] = e[i].num();
  } else {
    // a_i = n_i * prod_{j != i} d_j via prefix/suffix products.
    const std::size_t n = e.size();
    std::vector<BigInt> prefix(n + 1, BigInt(1)), suffix(n + 1, BigInt(1));
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * e[i].den();
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * e[i].den();
    for (std::size_t i = 0; i < n; ++i) a[i] = e[i].num() * prefix[i] * suffix[i + 1];
  }
  BigInt total(0);
  for (const auto& v : a) total += v;

  std::vector<Rational> out;
  out.reserve(a.size());
  for (auto& v : a) out.push_back(simplify(Rational(std::move(v), total)));
  return out;
}

inline std::vector<Rational> rat_softmax(const std::vector<Rational>& z, unsigned order) {
  return rat_softmax(std::span<const Rational>(z), order);
}

/// One Newton–Raphson step for 1/sqrt(a): y (3 - a y^2) / 2.
inline Rational nr_inv_sqrt_step(const Rational& a, const Rational& y) {
  return mul_pow2(y * (Rational(3) - a * y * y), -1);
}

struct InvSqrtResult {
  Rational value;
  std::vector<Rational> residuals;  // |a y_i^2 - 1| for every iterate, seed first
  unsigned iterations = 0;
};

namespace detail {
// Dyadic seed near 1/sqrt(a). a = m * 4^s with m collapsible to double.
inline Rational inv_sqrt_seed(const Rational& a) {
  const long excess = static_cast<long>(a.num().bit_width()) - static_cast<long>(a.den().bit_width());
  const long s = excess / 2;  // a / 4^s has magnitude near 1
  const double m = to_float(mul_pow2(a, -2 * s));
  const double y = 1.0 / std::sqrt(m);
  return mul_pow2(to_rational(y, 53).value, -s);
}
}  // namespace detail

/// y in Q with |a y^2 - 1| <= tol, by Newton–Raphson from a dyadic seed.
inline InvSqrtResult rat_inv_sqrt_traced(const Rational& a, const TranscendConfig& cfg) {
  if (a.sign() <= 0) throw std::domain_error("rat_inv_sqrt: argument must be > 0");
  const auto residual = [&](const Rational& y) { return (a * y * y - Rational(1)).abs(); };

  Rational y = detail::inv_sqrt_seed(a);
  if (a * y * y >= Rational(3)) {
    // Outside the basin: fall back to a seed below 1/sqrt(a).
    y = simplify(Rational(BigInt(1), floor(a) + BigInt(1)));
    if (a * y * y >= Rational(3)) throw std::domain_error("rat_inv_sqrt: seed outside convergence basin");
  }

  InvSqrtResult out;
  out.residuals.push_back(simplify(residual(y)));
  while (out.residuals.back() > cfg.nr_tolerance) {
    if (out.iterations == cfg.nr_max_iters) {
      throw std::runtime_error("rat_inv_sqrt: no convergence within nr_max_iters");
    }
    y = simplify(nr_inv_sqrt_step(a, y));
    ++out.iterations;
    out.residuals.push_back(simplify(residual(y)));
  }
  out.value = y;
  return out;
}

inline Rational rat_inv_sqrt(const Rational& a, const TranscendConfig& cfg) {
  return rat_inv_sqrt_traced(a, cfg).value;
}

/// (v_i - mean) / sqrt(var + eps) with exact mean and population variance.
inline std::vector<Rational> rat_layernorm(std::span<const Rational> v, const TranscendConfig& cfg) {
  if (v.empty()) throw std::invalid_argument("rat_layernorm: empty input");
  const Rational n(static_cast<std::int64_t>(v.size()));
  const Rational mean = simplify(sum_exact(v) / n);
  std::vector<Rational> centered;
  centered.reserve(v.size());
  Rational sq;
  for (const auto& x : v) {
    centered.push_back(x - mean);
    sq += centered.back() * centered.back();
  }
  const Rational var_eps = simplify(sq / n + cfg.layernorm_epsilon);
  if (var_eps.is_zero()) throw std::domain_error("rat_layernorm: zero variance with zero epsilon");
  const Rational inv = rat_inv_sqrt(var_eps, cfg);
  std::vector<Rational> out;
  out.reserve(v.size());
  for (const auto& c : centered) out.push_back(c * inv);
  return out;
}

inline std::vector<Rational> rat_layernorm(const std::vector<Rational>& v, const TranscendConfig& cfg) {
  return rat_layernorm(std::span<const Rational>(v), cfg);
}

/// max(0, q): a sign test on the numerator.
inline Rational rat_relu(const Rational& q) { return q.sign() > 0 ? q : Rational(); }

}  // namespace halo
