#pragma once

// Reduced-precision binary floating point emulated on doubles.
//
// Every emulated operation is computed exactly or in double and then rounded
// once to the target format. For BF16 and FP32 the double intermediate has at
// least 2p+2 significand bits, so the double rounding is innocuous and the
// result is the correctly rounded one. No fused multiply-add is used.

#include "halo/convert.hpp"
#include "halo/rational.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace halo {

enum class Regime { BF16, FP32, FP64, EXACT };

struct PrecisionRegime {
  Regime id;
  std::string_view name;
  int significand_bits;  // hidden bit included; 0 for EXACT
  int exponent_bits;     // 0 for EXACT
  int emin;              // minimum normal exponent
  int emax;
};

inline constexpr PrecisionRegime kBF16{Regime::BF16, "bf16", 8, 8, -126, 127};
inline constexpr PrecisionRegime kFP32{Regime::FP32, "fp32", 24, 8, -126, 127};
inline constexpr PrecisionRegime kFP64{Regime::FP64, "fp64", 53, 11, -1022, 1023};
inline constexpr PrecisionRegime kExact{Regime::EXACT, "exact", 0, 0, 0, 0};

inline const PrecisionRegime& regime(Regime r) {
  switch (r) {
    case Regime::BF16: return kBF16;
    case Regime::FP32: return kFP32;
    case Regime::FP64: return kFP64;
    case Regime::EXACT: return kExact;
  }
  throw std::invalid_argument("unknown regime");
}

inline const PrecisionRegime& parse_regime(std::string_view name) {
  for (const auto* r : {&kBF16, &kFP32, &kFP64, &kExact}) {
    if (r->name == name) return *r;
  }
  throw std::invalid_argument("unknown regime: " + std::string(name));
}

/// Nearest representable value in `fmt`, ties to even, with subnormals.
/// Overflow gives signed infinity. NaN passes through.
inline double round_to(double x, const PrecisionRegime& fmt) {
  if (fmt.id == Regime::EXACT) throw std::invalid_argument("round_to: EXACT has no rounding");
  if (fmt.id == Regime::FP64 || x == 0.0 || !std::isfinite(x)) return x;

  const int e = std::ilogb(x);
  const int lsb = (e < fmt.emin ? fmt.emin : e) - (fmt.significand_bits - 1);
  // Scaling by a power of two is exact; nearbyint rounds half to even.
  const double r = std::ldexp(std::nearbyint(std::ldexp(x, -lsb)), lsb);
  const double max_finite =
      std::ldexp(2.0 - std::ldexp(1.0, 1 - fmt.significand_bits), fmt.emax);
  if (std::fabs(r) > max_finite) return std::copysign(std::numeric_limits<double>::infinity(), x);
  return r;
}

/// ulp of x in the format (spacing at x's binade, subnormal-aware).
inline double ulp_in(double x, const PrecisionRegime& fmt) {
  const int e = x == 0.0 ? fmt.emin : std::ilogb(x);
  return std::ldexp(1.0, (e < fmt.emin ? fmt.emin : e) - (fmt.significand_bits - 1));
}

enum class OpKind { add, mul };

/// round_to(a op b): one rounding per operation.
inline double emulated_op(OpKind kind, double a, double b, const PrecisionRegime& fmt) {
  const double exact_in_double = kind == OpKind::add ? a + b : a * b;
  if (fmt.id == Regime::EXACT) {
    const Rational qa = from_double_exact(a);
    const Rational qb = from_double_exact(b);
    return to_float(kind == OpKind::add ? qa + qb : qa * qb);
  }
  return round_to(exact_in_double, fmt);
}

inline double emulated_add(double a, double b, const PrecisionRegime& fmt) {
  return emulated_op(OpKind::add, a, b, fmt);
}
inline double emulated_mul(double a, double b, const PrecisionRegime& fmt) {
  return emulated_op(OpKind::mul, a, b, fmt);
}

/// Left fold of emulated addition in the given order. EXACT delegates to
/// sum_exact and collapses the exact sum once.
inline double reduce_ordered(std::span<const double> values, std::span<const std::size_t> order,
                             const PrecisionRegime& fmt) {
  if (order.size() != values.size()) throw std::invalid_argument("reduce_ordered: order size");
  std::vector<bool> seen(values.size(), false);
  for (std::size_t i : order) {
    if (i >= values.size() || seen[i]) throw std::invalid_argument("reduce_ordered: not a permutation");
    seen[i] = true;
  }
  if (values.empty()) return 0.0;
  if (fmt.id == Regime::EXACT) {
    std::vector<Rational> lifted;
    lifted.reserve(values.size());
    for (std::size_t i : order) lifted.push_back(from_double_exact(values[i]));
    return to_float(sum_exact(lifted));
  }
  double acc = values[order[0]];
  for (std::size_t k = 1; k < order.size(); ++k) acc = emulated_add(acc, values[order[k]], fmt);
  return acc;
}

}  // namespace halo
