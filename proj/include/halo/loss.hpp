#pragma once

// Ring alignment loss with stop-gradient semantics, and the straight-through
// projection of continuous vectors onto the rational grid.

#include "halo/approx.hpp"
#include "halo/convert.hpp"
#include "halo/net.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace halo {

struct LossConfig {
  Rational beta = Rational(1, 4);
  Rational gamma = Rational(1);

  void validate() const {
    if (beta.sign() < 0 || gamma.sign() < 0) throw std::invalid_argument("LossConfig: beta and gamma must be >= 0");
  }
};

struct RingLoss {
  double loss = 0.0;
  std::vector<double> grad_ze;  // 2 gamma (z_e - z_q); the beta term is stopped here
  std::vector<double> grad_zq;  // 2 beta (z_q - z_e); the gamma term is stopped here
};

/// beta ||sg[z_e] - z_q||^2 + gamma ||z_e - sg[z_q]||^2 in double.
inline RingLoss ring_loss(const std::vector<double>& z_e, const std::vector<Rational>& z_q, const LossConfig& cfg) {
  cfg.validate();
  if (z_e.size() != z_q.size()) throw std::invalid_argument("ring_loss: length mismatch");
  const double beta = to_float(cfg.beta);
  const double gamma = to_float(cfg.gamma);
  RingLoss out;
  out.grad_ze.resize(z_e.size());
  out.grad_zq.resize(z_e.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < z_e.size(); ++i) {
    const double diff = z_e[i] - to_float(z_q[i]);
    sq += diff * diff;
    out.grad_ze[i] = 2.0 * gamma * diff;
    out.grad_zq[i] = -2.0 * beta * diff;
  }
  out.loss = (beta + gamma) * sq;
  return out;
}

struct SteProjection {
  std::vector<Rational> z_q;
  // Backward rule: d z_q / d z_e is the identity.
  static std::vector<double> backward(const std::vector<double>& upstream) { return upstream; }
};

/// Entrywise rational_approx of the exact lift of z_e.
inline SteProjection ste_project(const std::vector<double>& z_e, const RingConfig& cfg) {
  cfg.validate();
  SteProjection out;
  out.z_q.reserve(z_e.size());
  for (double v : z_e) out.z_q.push_back(rational_approx(from_double_exact(v), cfg.eps, cfg.d_max).value);
  return out;
}

}  // namespace halo
