#pragma once

// Dual-modular redundancy over the Mersenne primes 2^31-1 and 2^17-1.
// Residues are computed by end-around-carry folding, never by division.

#include "halo/bigint.hpp"
#include "halo/rational.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace halo {

inline constexpr unsigned kM1Bits = 31;
inline constexpr unsigned kM2Bits = 17;
inline constexpr std::uint64_t kM1 = (std::uint64_t{1} << kM1Bits) - 1;
inline constexpr std::uint64_t kM2 = (std::uint64_t{1} << kM2Bits) - 1;

/// x mod (2^k - 1) for x >= 0 by summing k-bit chunks with end-around carry.
inline std::uint64_t mersenne_mod(const BigInt& x, unsigned k) {
  if (x.sign() < 0) throw std::invalid_argument("mersenne_mod: x must be >= 0");
  if (k < 2 || k > 32) throw std::invalid_argument("mersenne_mod: k must be in [2, 32]");
  const std::uint64_t m = (std::uint64_t{1} << k) - 1;
  const std::vector<std::uint64_t> words = x.magnitude_words();
  const std::size_t nbits = words.size() * 64;

  std::uint64_t acc = 0;
  for (std::size_t pos = 0; pos < nbits; pos += k) {
    const std::size_t w = pos / 64, off = pos % 64;
    std::uint64_t chunk = words[w] >> off;
    if (off + k > 64 && w + 1 < words.size()) chunk |= words[w + 1] << (64 - off);
    acc += chunk & m;
    acc = (acc & m) + (acc >> k);  // stays below 2^(k+1)
  }
  while (acc > m) acc = (acc & m) + (acc >> k);
  return acc == m ? 0 : acc;
}

struct ResiduePair {
  std::uint64_t r1 = 0;  // mod 2^31-1
  std::uint64_t r2 = 0;  // mod 2^17-1
  friend bool operator==(const ResiduePair&, const ResiduePair&) = default;
};

/// Canonical non-negative residues; negative n maps to M - (|n| mod M).
inline ResiduePair residues(const BigInt& n) {
  const BigInt mag = n.abs();
  ResiduePair r{mersenne_mod(mag, kM1Bits), mersenne_mod(mag, kM2Bits)};
  if (n.sign() < 0) {
    if (r.r1 != 0) r.r1 = kM1 - r.r1;
    if (r.r2 != 0) r.r2 = kM2 - r.r2;
  }
  return r;
}

enum class CheckKind { add, mul };

struct FaultReport {
  bool detected = false;
  bool m1_failed = false;
  bool m2_failed = false;
  BigInt injected_error;  // c - (a op b)
};

inline ResiduePair combine(const ResiduePair& x, const ResiduePair& y, CheckKind kind) {
  if (kind == CheckKind::add) return {(x.r1 + y.r1) % kM1, (x.r2 + y.r2) % kM2};
  return {(x.r1 * y.r1) % kM1, (x.r2 * y.r2) % kM2};
}

/// Verifies c == a op b in both modular fields.
inline FaultReport dmr_check(const BigInt& a, const BigInt& b, const BigInt& c, CheckKind kind) {
  const ResiduePair expect = combine(residues(a), residues(b), kind);
  const ResiduePair got = residues(c);
  FaultReport f;
  f.m1_failed = expect.r1 != got.r1;
  f.m2_failed = expect.r2 != got.r2;
  f.detected = f.m1_failed || f.m2_failed;
  f.injected_error = c - (kind == CheckKind::add ? a + b : a * b);
  return f;
}

/// c with the listed magnitude bits toggled.
inline BigInt inject_fault(const BigInt& c, std::initializer_list<std::size_t> bits) {
  BigInt out = c;
  for (std::size_t k : bits) out = out.flip_bit(k);
  return out;
}

inline BigInt inject_fault(const BigInt& c, const std::vector<std::size_t>& bits) {
  BigInt out = c;
  for (std::size_t k : bits) out = out.flip_bit(k);
  return out;
}

/// Rational results decompose into integer checks on numerator and
/// denominator: a/b * c/d = (ac)/(bd).
inline FaultReport dmr_check_rational_mul(const Rational& x, const Rational& y, const Rational& z) {
  FaultReport n = dmr_check(x.num(), y.num(), z.num(), CheckKind::mul);
  const FaultReport d = dmr_check(x.den(), y.den(), z.den(), CheckKind::mul);
  n.m1_failed = n.m1_failed || d.m1_failed;
  n.m2_failed = n.m2_failed || d.m2_failed;
  n.detected = n.detected || d.detected;
  return n;
}

/// Shadow verification of every integer add/multiply inside rational
/// arithmetic on the threads where it is installed.
class ShadowPipeline : public ArithmeticObserver {
 public:
  void on_add(const BigInt& a, const BigInt& b, const BigInt& c) override { record(dmr_check(a, b, c, CheckKind::add)); }
  void on_mul(const BigInt& a, const BigInt& b, const BigInt& c) override { record(dmr_check(a, b, c, CheckKind::mul)); }

  std::uint64_t checked() const { return checked_.load(); }
  std::uint64_t failed() const { return failed_.load(); }

 private:
  void record(const FaultReport& f) {
    checked_.fetch_add(1, std::memory_order_relaxed);
    if (f.detected) failed_.fetch_add(1, std::memory_order_relaxed);
  }
  std::atomic<std::uint64_t> checked_{0};
  std::atomic<std::uint64_t> failed_{0};
};

}  // namespace halo
