#include "halo/net.hpp"
#include "support/generators.hpp"

#include <gtest/gtest.h>

using halo::BigInt;
using halo::Rational;
using halo::RationalTensor;
using halo::test::Gen;

namespace {

halo::InferenceConfig small_config(std::size_t depth) {
  halo::InferenceConfig c;
  c.depth = depth;
  c.dims = {4, 4, 5, 4};
  c.ring.interval = 2;
  c.ring.d_max = BigInt(256);
  c.taylor.taylor_order = 4;
  return c;
}

// Closest grid point by scanning denominators; ties go to the smaller one.
Rational scan_nearest(const Rational& x, std::int64_t d_max) {
  Rational best = Rational(halo::floor(x));
  for (std::int64_t d = 1; d <= d_max; ++d) {
    const BigInt f = halo::floor(x * Rational(d));
    for (const BigInt& n : {f, f + BigInt(1)}) {
      const Rational c = halo::simplify(Rational(n, BigInt(d)));
      const Rational ec = (c - x).abs(), eb = (best - x).abs();
      if (ec < eb || (ec == eb && c.den() < best.den())) best = c;
    }
  }
  return best;
}

}  // namespace

TEST(Net, AttentionShift) {
  EXPECT_EQ(halo::attention_shift(1), 0);
  EXPECT_EQ(halo::attention_shift(16), 2);
  EXPECT_EQ(halo::attention_shift(64), 3);
  EXPECT_EQ(halo::attention_shift(256), 4);
}

TEST(Net, AttentionWithEqualKeysAveragesValues) {
  const RationalTensor q(2, 2, {1, 2, 3, 4});
  const RationalTensor k(3, 2, {1, 1, 1, 1, 1, 1});
  const RationalTensor v(3, 1, {Rational(3), Rational(6), Rational(-3)});
  const auto out = halo::rational_attention(q, k, v, {});
  EXPECT_EQ(out(0, 0), Rational(2));
  EXPECT_EQ(out(1, 0), Rational(2));
  EXPECT_THROW(halo::rational_attention(q, RationalTensor(3, 3), v, {}), halo::DimensionError);
  EXPECT_THROW(halo::rational_attention(q, k, RationalTensor(2, 1), {}), halo::DimensionError);
}

TEST(NetProperty, AttentionRowsSumToOne) {
  Gen g(61);
  for (int i = 0; i < 30; ++i) {
    const std::size_t n = 1 + g.below(5), d = 1 + g.below(4);
    std::vector<Rational> qd, kd;
    for (std::size_t e = 0; e < n * d; ++e) {
      qd.push_back(Rational(g.range(-64, 64), 32));
      kd.push_back(Rational(g.range(-64, 64), 32));
    }
    const auto a = halo::attention_weights(RationalTensor(n, d, qd), RationalTensor(n, d, kd), {});
    for (std::size_t r = 0; r < n; ++r) {
      Rational s;
      for (std::size_t c = 0; c < n; ++c) s += a(r, c);
      ASSERT_EQ(s, Rational(1));
    }
  }
}

TEST(Net, FfnExample) {
  const RationalTensor h(1, 2, {Rational(3, 2), Rational(-1)});
  const RationalTensor w1(2, 2, {1, 0, 0, 1});
  const RationalTensor w2(2, 1, {2, 5});
  EXPECT_EQ(halo::rational_ffn(h, w1, w2)(0, 0), Rational(3));
}

TEST(Net, RingSnapsToGrid) {
  halo::RingConfig cfg;
  cfg.eps = Rational(1, 1000000);
  const RationalTensor h(1, 2, {Rational(3333333, 10000000), Rational(-7, 4)});
  const auto r = halo::the_ring(h, cfg);
  EXPECT_TRUE(r.value(0, 0).identical(Rational(1, 3)));
  EXPECT_TRUE(r.value(0, 1).identical(Rational(-7, 4)));
  EXPECT_EQ(r.tolerance_misses, 0u);
}

TEST(Net, RingDenoiserCollapsesThroughDouble) {
  halo::RingConfig cfg;
  cfg.denoiser = halo::Denoiser::round_through_float;
  cfg.eps = Rational(1, 2);
  cfg.d_max = BigInt(1);
  const RationalTensor h(1, 1, {Rational(5, 2) + Rational(BigInt(1), BigInt::pow2(200))});
  // Without denoising 5/2 + tiny rounds up to 3; the double is exactly 5/2, whose
  // nearest integer is 2 (closest-then-smaller).
  EXPECT_EQ(halo::the_ring(h, cfg).value(0, 0), Rational(2));
  cfg.denoiser = halo::Denoiser::identity;
  EXPECT_EQ(halo::the_ring(h, cfg).value(0, 0), Rational(3));
}

TEST(NetProperty, RingIsNearestGridPointWhenEpsIsTight) {
  Gen g(62);
  halo::RingConfig cfg;
  cfg.eps = Rational(BigInt(1), BigInt::pow2(80));
  for (int i = 0; i < 300; ++i) {
    const std::int64_t d_max = g.range(1, 200);
    cfg.d_max = BigInt(d_max);
    const Rational x = g.rational(50);
    const auto r = halo::the_ring(RationalTensor(1, 1, {x}), cfg);
    const Rational want = scan_nearest(x, d_max);
    ASSERT_EQ(r.value(0, 0), want) << x << " d_max=" << d_max;
    ASSERT_LE(r.value(0, 0).den(), cfg.d_max);
    ASSERT_TRUE(r.value(0, 0).reduced());
    ASSERT_EQ(r.tolerance_misses, want == x ? 0u : 1u);
  }
}

TEST(Net, RingBitBound) {
  EXPECT_EQ(halo::ring_bit_bound(BigInt(65536), 0), 36u);
  EXPECT_EQ(halo::integer_part_bits(Rational(-9, 2)), 3u);
  EXPECT_EQ(halo::integer_part_bits(Rational(1, 3)), 0u);
}

TEST(Net, DepthZeroIsTheLiftedEmbedding) {
  const auto cfg = small_config(0);
  const auto w = halo::make_weights(cfg.dims, cfg.scale_bits, cfg.seed);
  const std::vector<std::size_t> tokens = {1, 3};
  const auto r = halo::run_inference(tokens, cfg, w);
  EXPECT_EQ(r.trace.size(), 1u);
  EXPECT_TRUE(r.state.identical(halo::embed_and_lift(tokens, w, cfg.scale_bits)));
  double s = 0;
  for (double p : r.probs) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_EQ(r.logits.size(), cfg.dims.vocab);
}

TEST(Net, InputValidation) {
  auto cfg = small_config(1);
  const auto w = halo::make_weights(cfg.dims, cfg.scale_bits, cfg.seed);
  EXPECT_THROW(halo::run_inference({}, cfg, w), std::invalid_argument);
  EXPECT_THROW(halo::run_inference({7}, cfg, w), std::out_of_range);
  EXPECT_THROW(halo::run_inference({0, 0, 0, 0, 0}, cfg, w), std::out_of_range);
  cfg.ring.interval = 0;
  EXPECT_THROW(halo::run_inference({0}, cfg, w), std::invalid_argument);
  cfg = small_config(1);
  cfg.dims.d_model = 8;
  EXPECT_THROW(halo::run_inference({0}, cfg, w), halo::DimensionError);
}

TEST(Net, ResidualIsLossless) {
  const auto cfg = small_config(1);
  auto w = halo::make_weights(cfg.dims, cfg.scale_bits, cfg.seed);
  const auto h = halo::embed_and_lift({0, 2, 4}, w, cfg.scale_bits);
  const RationalTensor q = halo::rational_matmul(h, w.wq), k = halo::rational_matmul(h, w.wk),
                       v = halo::rational_matmul(h, w.wv);
  const RationalTensor mlp = halo::rational_ffn(halo::rational_attention(q, k, v, cfg.taylor), w.w1, w.w2);
  const RationalTensor out = halo::halo_block(h, w, cfg);
  for (std::size_t i = 0; i < h.size(); ++i) ASSERT_EQ(out.data()[i] - h.data()[i], mlp.data()[i]);
  w.wv = RationalTensor(cfg.dims.d_model, cfg.dims.d_model);
  EXPECT_TRUE(halo::simplify(halo::halo_block(h, w, cfg)) == h);
}

TEST(NetProperty, InferenceIsIndependentOfThreadCount) {
  auto cfg = small_config(4);
  const auto w = halo::make_weights(cfg.dims, cfg.scale_bits, cfg.seed);
  const auto one = halo::run_inference({1, 2, 3}, cfg, w);
  for (unsigned t : {2u, 3u, 8u}) {
    cfg.threads = t;
    const auto r = halo::run_inference({1, 2, 3}, cfg, w);
    ASSERT_TRUE(r.state.identical(one.state));
    ASSERT_EQ(r.logits, one.logits);
    ASSERT_EQ(r.trace.size(), one.trace.size());
  }
}

TEST(NetProperty, RingStepsLandOnGridAndBoundHolds) {
  auto cfg = small_config(8);
  const auto w = halo::make_weights(cfg.dims, cfg.scale_bits, cfg.seed);
  const auto r = halo::run_inference({0, 1}, cfg, w);
  ASSERT_EQ(r.trace.size(), 9u);
  for (const auto& s : r.trace) EXPECT_EQ(s.ring_applied, s.step > 0 && s.step % 2 == 0);
  for (const auto& q : r.state.data()) EXPECT_LE(q.den(), cfg.ring.d_max);
  const auto rep = halo::check_boundedness(r.trace, cfg.ring);
  EXPECT_GT(rep.alpha_obs, 0u);
  EXPECT_TRUE(rep.holds_k()) << rep.max_bits << " > " << rep.bound_k();
  for (const auto& s : r.trace)
    if (s.ring_applied) EXPECT_LE(s.widest.total_bits, halo::ring_bit_bound(cfg.ring.d_max, s.int_bits));
}

TEST(Net, WeightsAreSeededDyadics) {
  const halo::ModelDims dims{8, 8, 4, 4};
  const auto a = halo::make_weights(dims, 16, 7), b = halo::make_weights(dims, 16, 7), c = halo::make_weights(dims, 16, 8);
  EXPECT_TRUE(a.wq.identical(b.wq));
  EXPECT_FALSE(a.wq.identical(c.wq));
  for (const auto& q : a.w1.data()) {
    EXPECT_TRUE(q.is_dyadic());
    EXPECT_LE(q.abs(), Rational(1, 2) + Rational(1, 256));
  }
  EXPECT_EQ(a.positional(1, 2), Rational(5, 64));  // (7 + 6) % 17 - 8
}

TEST(Net, LightChainGrowsEveryStep) {
  const auto t = halo::light_chain_trace(8, 10, 16, 3);
  ASSERT_EQ(t.size(), 11u);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GT(t[i].widest.total_bits, t[i - 1].widest.total_bits);
}
