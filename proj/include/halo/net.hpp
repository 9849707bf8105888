#pragma once

// The rational transformer block, the Ring re-grounding step and the
// end-to-end recurrent inference loop.
//
// Stage 1 lifts float embeddings into Q at scale S. Stage 2 runs the exact
// block T times with a lossless residual. Stage 3 projects the state onto the
// bounded-denominator grid every K steps. Stage 4 collapses to double and
// produces a next-token distribution.

#include "halo/approx.hpp"
#include "halo/convert.hpp"
#include "halo/float_emu.hpp"
#include "halo/random.hpp"
#include "halo/tensor.hpp"
#include "halo/transcend.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace halo {

enum class Denoiser { identity, round_through_float };

struct RingConfig {
  bool enabled = true;
  std::int64_t interval = 50;  // K
  BigInt d_max = BigInt(65536);
  Rational eps = Rational(BigInt(1), BigInt::pow(BigInt(10), 16));
  Denoiser denoiser = Denoiser::identity;

  void validate() const {
    if (interval < 1) throw std::invalid_argument("RingConfig: interval must be >= 1");
    if (d_max.sign() <= 0) throw std::invalid_argument("RingConfig: d_max must be >= 1");
    if (eps.sign() <= 0) throw std::invalid_argument("RingConfig: eps must be > 0");
  }
};

struct ModelDims {
  std::size_t d_model = 32;
  std::size_t d_ff = 32;
  std::size_t vocab = 16;
  std::size_t max_len = 8;
};

struct InferenceConfig {
  std::size_t depth = 0;  // T
  unsigned scale_bits = 16;  // S = 2^scale_bits
  ModelDims dims;
  TranscendConfig taylor;
  RingConfig ring;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  double coda_layernorm_eps = 1e-5;

  void validate() const {
    if (dims.d_model < 1 || dims.d_ff < 1 || dims.vocab < 1 || dims.max_len < 1) {
      throw std::invalid_argument("InferenceConfig: dimensions must be >= 1");
    }
    taylor.validate();
    ring.validate();
  }
};

struct ModelWeights {
  RationalTensor embedding;   // vocab x d_model
  RationalTensor positional;  // max_len x d_model
  RationalTensor wq, wk, wv;  // d_model x d_model
  RationalTensor w1;          // d_model x d_ff
  RationalTensor w2;          // d_ff x d_model
  RationalTensor w_vocab;     // d_model x vocab
};

/// A BF16 sample of uniform(-bound, bound), lifted at scale 2^scale_bits.
inline Rational bf16_lifted_uniform(Rng& rng, double bound, unsigned scale_bits) {
  return to_rational(round_to(rng.uniform(-bound, bound), kBF16), scale_bits).value;
}

inline RationalTensor bf16_lifted_matrix(Rng& rng, std::size_t rows, std::size_t cols, double bound,
                                         unsigned scale_bits) {
  std::vector<Rational> data;
  data.reserve(rows * cols);
  for (std::size_t i = 0; i < rows * cols; ++i) data.push_back(bf16_lifted_uniform(rng, bound, scale_bits));
  return RationalTensor(rows, cols, std::move(data));
}

/// Seeded random dyadic weights: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// rounded to BF16 and lifted. Positional table is a fixed dyadic pattern.
inline ModelWeights make_weights(const ModelDims& dims, unsigned scale_bits, std::uint64_t seed) {
  Rng rng(seed);
  const auto fan = [](std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); };
  ModelWeights w;
  w.embedding = bf16_lifted_matrix(rng, dims.vocab, dims.d_model, 1.0, scale_bits);
  std::vector<Rational> pe;
  for (std::size_t p = 0; p < dims.max_len; ++p)
    for (std::size_t j = 0; j < dims.d_model; ++j)
      pe.push_back(simplify(Rational(static_cast<std::int64_t>((p * 7 + j * 3) % 17) - 8, 64)));
  w.positional = RationalTensor(dims.max_len, dims.d_model, std::move(pe));
  w.wq = bf16_lifted_matrix(rng, dims.d_model, dims.d_model, fan(dims.d_model), scale_bits);
  w.wk = bf16_lifted_matrix(rng, dims.d_model, dims.d_model, fan(dims.d_model), scale_bits);
  w.wv = bf16_lifted_matrix(rng, dims.d_model, dims.d_model, fan(dims.d_model), scale_bits);
  w.w1 = bf16_lifted_matrix(rng, dims.d_model, dims.d_ff, fan(dims.d_model), scale_bits);
  w.w2 = bf16_lifted_matrix(rng, dims.d_ff, dims.d_model, fan(dims.d_ff), scale_bits);
  w.w_vocab = bf16_lifted_matrix(rng, dims.d_model, dims.vocab, fan(dims.d_model), scale_bits);
  return w;
}

/// k with 2^-k the nearest power of two to 1/sqrt(d).
inline long attention_shift(std::size_t d) {
  return std::lround(0.5 * std::log2(static_cast<double>(d)));
}

/// Row-wise Taylor softmax of Q K^T * 2^-k. Every row sums to exactly 1.
inline RationalTensor attention_weights(const RationalTensor& q, const RationalTensor& k,
                                        const TranscendConfig& cfg, unsigned threads = 1) {
  if (q.cols() != k.cols()) throw DimensionError("rational_attention: Q and K widths differ");
  const RationalTensor scores = rational_matmul(q, k.transpose(), threads);
  const long shift = attention_shift(q.cols());
  std::vector<Rational> a;
  a.reserve(scores.size());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    std::vector<Rational> row;
    row.reserve(scores.cols());
    for (std::size_t c = 0; c < scores.cols(); ++c) row.push_back(mul_pow2(scores(r, c), -shift));
    for (auto& v : rat_softmax(row, cfg.taylor_order)) a.push_back(std::move(v));
  }
  return RationalTensor(scores.rows(), scores.cols(), std::move(a));
}

inline RationalTensor rational_attention(const RationalTensor& q, const RationalTensor& k, const RationalTensor& v,
                                         const TranscendConfig& cfg, unsigned threads = 1) {
  if (k.rows() != v.rows()) throw DimensionError("rational_attention: K and V lengths differ");
  return rational_matmul(attention_weights(q, k, cfg, threads), v, threads);
}

/// relu(H W1) W2.
inline RationalTensor rational_ffn(const RationalTensor& h, const RationalTensor& w1, const RationalTensor& w2,
                                   unsigned threads = 1) {
  const RationalTensor hidden = rational_matmul(h, w1, threads).map([](const Rational& q) { return rat_relu(q); });
  return rational_matmul(hidden, w2, threads);
}

struct RingResult {
  RationalTensor value;
  std::size_t tolerance_misses = 0;
};

/// Per entry: denoise, project onto {q : den(q) <= d_max} with rational_approx,
/// simplify.
inline RingResult the_ring(const RationalTensor& h, const RingConfig& cfg) {
  cfg.validate();
  RingResult out;
  std::vector<Rational> data;
  data.reserve(h.size());
  for (const auto& q : h.data()) {
    Rational x = q;
    if (cfg.denoiser == Denoiser::round_through_float) x = from_double_exact(to_float(q));
    Approximation a = rational_approx(x, cfg.eps, cfg.d_max);
    if (a.tolerance_miss) ++out.tolerance_misses;
    data.push_back(simplify(a.value));
  }
  out.value = RationalTensor(h.rows(), h.cols(), std::move(data));
  return out;
}

/// Bits of floor(|q|).
inline std::size_t integer_part_bits(const Rational& q) { return floor(q.abs()).bit_width(); }

inline std::size_t max_integer_part_bits(const RationalTensor& t) {
  std::size_t m = 0;
  for (const auto& q : t.data()) m = std::max(m, integer_part_bits(q));
  return m;
}

/// Total bits any grid member of magnitude below 2^int_bits can occupy.
inline std::size_t ring_bit_bound(const BigInt& d_max, std::size_t int_bits) {
  return 2 * (d_max.bit_width() + int_bits + 1);
}

struct StepBits {
  std::size_t step = 0;
  BitReport widest;           // widest entry of H_t (after the Ring when applied)
  BitReport pre_ring;         // widest entry of H_temp; equals `widest` when no Ring
  std::size_t register_bits = 0;  // widest integer register of H_t
  std::size_t int_bits = 0;       // max bits of an integer part in H_t
  bool ring_applied = false;
};

struct InferenceResult {
  std::vector<double> logits;  // last position
  std::vector<double> probs;   // softmax(logits)
  std::vector<StepBits> trace; // steps 0..T
  RationalTensor state;        // H_T
  std::size_t ring_misses = 0;
};

inline StepBits step_bits(std::size_t step, const RationalTensor& h) {
  StepBits s;
  s.step = step;
  s.widest = h.widest();
  s.pre_ring = s.widest;
  s.register_bits = h.register_bits();
  s.int_bits = max_integer_part_bits(h);
  return s;
}

/// Stage 1: embedding + positional table in float, lifted at scale S.
inline RationalTensor embed_and_lift(const std::vector<std::size_t>& tokens, const ModelWeights& w,
                                     unsigned scale_bits) {
  const std::size_t d = w.embedding.cols();
  std::vector<Rational> data;
  data.reserve(tokens.size() * d);
  for (std::size_t p = 0; p < tokens.size(); ++p) {
    if (tokens[p] >= w.embedding.rows()) throw std::out_of_range("run_inference: token id out of vocabulary");
    if (p >= w.positional.rows()) throw std::out_of_range("run_inference: sequence longer than max_len");
    for (std::size_t j = 0; j < d; ++j) {
      const double hf = to_float(w.embedding(tokens[p], j)) + to_float(w.positional(p, j));
      data.push_back(to_rational(hf, scale_bits).value);
    }
  }
  return RationalTensor(tokens.size(), d, std::move(data));
}

/// Stage 4 on a collapsed state: LayerNorm of the last row, vocab
/// projection, softmax. Plain double arithmetic.
inline void coda(const std::vector<double>& last_row, const RationalTensor& w_vocab, double ln_eps,
                 std::vector<double>& logits, std::vector<double>& probs) {
  const std::size_t d = last_row.size();
  double mean = 0.0;
  for (double v : last_row) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : last_row) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + ln_eps);

  const std::vector<double> wv = w_vocab.to_floats();
  const std::size_t vocab = w_vocab.cols();
  logits.assign(vocab, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double n = (last_row[j] - mean) * inv;
    for (std::size_t c = 0; c < vocab; ++c) logits[c] += n * wv[j * vocab + c];
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  probs.resize(vocab);
  double z = 0.0;
  for (std::size_t c = 0; c < vocab; ++c) z += probs[c] = std::exp(logits[c] - mx);
  for (auto& p : probs) p /= z;
}

/// One exact block: attention over H, FFN, lossless residual.
inline RationalTensor halo_block(const RationalTensor& h, const ModelWeights& w, const InferenceConfig& cfg) {
  const unsigned th = cfg.threads;
  const RationalTensor q = rational_matmul(h, w.wq, th);
  const RationalTensor k = rational_matmul(h, w.wk, th);
  const RationalTensor v = rational_matmul(h, w.wv, th);
  const RationalTensor attn = rational_attention(q, k, v, cfg.taylor, th);
  const RationalTensor mlp = rational_ffn(attn, w.w1, w.w2, th);
  return rational_add(mlp, h);
}

inline InferenceResult run_inference(const std::vector<std::size_t>& tokens, const InferenceConfig& cfg,
                                     const ModelWeights& w) {
  cfg.validate();
  if (tokens.empty()) throw std::invalid_argument("run_inference: empty token sequence");
  if (w.embedding.cols() != cfg.dims.d_model || w.wq.rows() != cfg.dims.d_model ||
      w.w1.cols() != cfg.dims.d_ff || w.w2.rows() != cfg.dims.d_ff) {
    throw DimensionError("run_inference: weight shapes do not match the configured dimensions");
  }

  InferenceResult res;
  RationalTensor h = embed_and_lift(tokens, w, cfg.scale_bits);
  res.trace.push_back(step_bits(0, h));

  for (std::size_t t = 1; t <= cfg.depth; ++t) {
    RationalTensor temp = halo_block(h, w, cfg);
    const bool ring = cfg.ring.enabled && t % static_cast<std::size_t>(cfg.ring.interval) == 0;
    if (ring) {
      const BitReport before = temp.widest();
      RingResult r = the_ring(temp, cfg.ring);
      res.ring_misses += r.tolerance_misses;
      h = std::move(r.value);
      StepBits s = step_bits(t, h);
      s.pre_ring = before;
      s.ring_applied = true;
      res.trace.push_back(s);
    } else {
      h = std::move(temp);
      res.trace.push_back(step_bits(t, h));
    }
  }

  const std::vector<double> last = h.row(h.rows() - 1).to_floats();
  coda(last, w.w_vocab, cfg.coda_layernorm_eps, res.logits, res.probs);
  res.state = std::move(h);
  return res;
}

struct BoundednessReport {
  std::size_t alpha_obs = 0;   // max per-step growth of the widest entry
  std::size_t b_ring = 0;
  std::size_t max_bits = 0;    // over H_t and H_temp
  std::size_t interval = 0;
  std::size_t bound_k() const { return b_ring + interval * alpha_obs; }
  std::size_t bound_k_minus_1() const { return b_ring + (interval - 1) * alpha_obs; }
  bool holds_k() const { return max_bits <= bound_k(); }
  bool holds_k_minus_1() const { return max_bits <= bound_k_minus_1(); }
};

/// Measures the bit-width trajectory against B_ring + K*alpha. B_ring is
/// evaluated for the largest integer part seen at step 0 and after each Ring.
inline BoundednessReport check_boundedness(const std::vector<StepBits>& trace, const RingConfig& ring) {
  BoundednessReport r;
  r.interval = static_cast<std::size_t>(ring.interval);
  std::size_t int_bits = trace.empty() ? 0 : trace.front().int_bits;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const StepBits& s = trace[i];
    r.max_bits = std::max({r.max_bits, s.widest.total_bits, s.pre_ring.total_bits});
    if (s.ring_applied) int_bits = std::max(int_bits, s.int_bits);
    if (i > 0) {
      const std::size_t prev = trace[i - 1].widest.total_bits;
      if (s.pre_ring.total_bits > prev) r.alpha_obs = std::max(r.alpha_obs, s.pre_ring.total_bits - prev);
    }
  }
  r.b_ring = ring_bit_bound(ring.d_max, int_bits);
  return r;
}

/// The Light stream as a bare matmul chain: h <- W h with BF16-lifted
/// weights, no reduction. One trace entry per matrix multiplication.
inline std::vector<StepBits> light_chain_trace(std::size_t dim, std::size_t steps, unsigned scale_bits,
                                               std::uint64_t seed) {
  Rng rng(seed);
  const RationalTensor w = bf16_lifted_matrix(rng, dim, dim, 1.0 / std::sqrt(static_cast<double>(dim)), scale_bits);
  RationalTensor h = bf16_lifted_matrix(rng, dim, 1, 1.0, scale_bits);
  std::vector<StepBits> trace;
  trace.push_back(step_bits(0, h));
  for (std::size_t t = 1; t <= steps; ++t) {
    h = rational_matmul(w, h);
    trace.push_back(step_bits(t, h));
  }
  return trace;
}

}  // namespace halo
