// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "halo/bench/experiments.hpp"
#include "halo/cli/app.hpp"
#include "halo/integrity.hpp"
#include "halo/loss.hpp"
#include "halo/net.hpp"
#include "halo/transcend.hpp"

#include <mpfr.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using halo::BigInt;
using halo::Rational;
using halo::Regime;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

BigInt random_bits(halo::Rng& rng, std::size_t bits) {
  BigInt v(0);
  for (std::size_t done = 0; done < bits; done += 32) {
    v <<= 32;
    v += BigInt(static_cast<std::int64_t>(rng.next() >> 32));
  }
  return v >> ((bits + 31) / 32 * 32 - bits);
}

Rational random_rational(halo::Rng& rng, std::size_t max_bits) {
  const std::size_t nb = 1 + rng.below(max_bits), db = 1 + rng.below(max_bits);
  BigInt n = random_bits(rng, nb);
  if (rng.below(2)) n = -n;
  return Rational(std::move(n), random_bits(rng, db) + BigInt(1));
}

std::string fmt(double x) { return halo::bench::format_double(x); }

std::string secs_text(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<Regime> kFloatAndExact = {Regime::BF16, Regime::FP32, Regime::EXACT};

Outcome associativity() {
  const auto t0 = std::chrono::steady_clock::now();
  halo::Rng rng(42);
  std::size_t mismatches = 0;
  for (int s = 0; s < 1000; ++s) {
    std::vector<Rational> seq(1 + rng.below(100));
    for (auto& q : seq) q = random_rational(rng, 128);
    const Rational ref = halo::sum_exact(seq);
    for (int p = 0; p < 10; ++p) {
      std::vector<Rational> perm;
      for (std::size_t i : rng.permutation(seq.size())) perm.push_back(seq[i]);
      if (!halo::sum_exact(perm).identical(ref)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  const std::vector<double> w = halo::bench::associativity_witness();
  const std::vector<std::size_t> left = {0, 1, 2, 3}, small_first = {1, 2, 0, 3};
  const double a = halo::reduce_ordered(w, left, halo::kBF16), b = halo::reduce_ordered(w, small_first, halo::kBF16);
  const bool ok = mismatches == 0 && a != b && secs < 10.0;
  return {ok, "exact mismatches " + std::to_string(mismatches) + " over 10^4 permuted sums in " + secs_text(secs) +
                  "; BF16 witness orders give " + fmt(a) + " vs " + fmt(b)};
}

Outcome one_third() {
  const Rational third(1, 3);
  const Rational exact = halo::simplify((third + third) + third);
  const double t = halo::round_to(1.0 / 3.0, halo::kBF16);
  const double bf = halo::emulated_add(halo::emulated_add(t, t, halo::kBF16), t, halo::kBF16);
  const bool ok = exact.identical(Rational(1)) && bf != 1.0;
  return {ok, "exact sum " + exact.to_string() + "; BF16 sum " + fmt(bf) + " (bf16(1/3) = " + fmt(t) + ")"};
}

Outcome logistic() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = halo::bench::run_logistic({}, kFloatAndExact, 42);
  const double secs = seconds_since(t0);
  const long bf = r.survival_step.at(Regime::BF16), fp = r.survival_step.at(Regime::FP32);
  const bool ok = r.exact_max_error == 0.0 && r.survival_step.at(Regime::EXACT) == -1 && bf >= 0 && bf <= 15 &&
                  fp >= 15 && fp <= 35 && fp > bf && secs < 30.0;
  return {ok, "EXACT max error " + fmt(r.exact_max_error) + "; first error > 0.01 at BF16 step " + std::to_string(bf) +
                  ", FP32 step " + std::to_string(fp) + "; " + secs_text(secs)};
}

Outcome drift() {
  const auto r = halo::bench::run_drift({}, kFloatAndExact, 42);
  const long bf = r.first_exceed.at(Regime::BF16), fp = r.first_exceed.at(Regime::FP32);
  const bool ok = bf >= 0 && bf <= 50 && fp > bf && r.exact_max_error == 0.0;
  return {ok, "sigma_max " + fmt(r.sigma) + "; first error > 1e-4 at BF16 step " + std::to_string(bf) +
                  ", FP32 step " + (fp < 0 ? std::string("never") : std::to_string(fp)) + "; EXACT max error " +
                  fmt(r.exact_max_error)};
}

Outcome theorem_one() {
  std::ostringstream d;
  bool ok = true;
  for (std::int64_t k : {10, 50}) {
    halo::bench::RingCostConfig c;
    c.steps = 300;
    c.model.dims.d_model = 32;
    c.model.ring.interval = k;
    const auto r = halo::bench::run_ring_cost(c, 42);
    const std::size_t off = r.without_ring.at(2 * k).widest.total_bits, on = r.with_ring.at(2 * k).widest.total_bits;
    ok = ok && r.bound.holds_k() && off > on;
    d << "K=" << k << ": max " << r.bound.max_bits << " <= " << r.bound.bound_k() << " (B_ring " << r.bound.b_ring
      << ", alpha " << r.bound.alpha_obs << ", (K-1) form " << (r.bound.holds_k_minus_1() ? "holds" : "fails")
      << "), step 2K bits off/on " << off << "/" << on << "; ";
  }
  return {ok, d.str()};
}

Outcome headroom() {
  const auto r = halo::bench::run_pipeline({}, 42);
  const std::size_t steps = r.stats.steps_before_first_trigger();
  return {steps >= 40, std::to_string(steps) + " matmul steps before the first reduction trigger (reference figure: over 50); "
                           "start width " + std::to_string(r.trace.front().register_bits) + " bits"};
}

Outcome dmr() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = halo::bench::run_dmr({}, 42);
  const double secs = seconds_since(t0);
  const bool ok = r.single_total == 512 && r.single_detected == 512 && r.burst_total == 100000 &&
                  r.burst_undetected_not_congruent == 0 && !r.collision_detected && secs < 60.0;
  return {ok, "single-bit " + std::to_string(r.single_detected) + "/" + std::to_string(r.single_total) +
                  " detected; bursts undetected " + std::to_string(r.burst_undetected) + " (not multiple of M1*M2: " +
                  std::to_string(r.burst_undetected_not_congruent) + "); E = M1*M2 " +
                  (r.collision_detected ? "detected" : "undetected") + "; " + secs_text(secs)};
}

Outcome transcendental() {
  // e to 200 decimal digits.
  mpfr_t e, x;
  mpfr_init2(e, 700);
  mpfr_init2(x, 700);
  mpfr_set_ui(e, 1, MPFR_RNDN);
  mpfr_exp(e, e, MPFR_RNDN);
  const Rational t = halo::rat_exp(Rational(1), 10);
  mpz_class n(t.num().raw()), d(t.den().raw());
  mpfr_set_z(x, n.get_mpz_t(), MPFR_RNDN);
  mpfr_div_z(x, x, d.get_mpz_t(), MPFR_RNDN);
  mpfr_sub(x, x, e, MPFR_RNDN);
  const double exp_err = std::fabs(mpfr_get_d(x, MPFR_RNDN));
  mpfr_clear(e);
  mpfr_clear(x);

  halo::Rng rng(7);
  std::size_t softmax_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Rational> z(1 + rng.below(16));
    for (auto& v : z) v = Rational(static_cast<std::int64_t>(rng.below(2001)) - 1000, 1 + rng.below(200));
    Rational total;
    for (const auto& p : halo::rat_softmax(z, 8)) total += p;
    if (total != Rational(1)) ++softmax_bad;
  }

  halo::TranscendConfig cfg;
  cfg.nr_tolerance = Rational(BigInt(1), BigInt::pow(BigInt(10), 30));
  Rational worst;
  for (int i = 0; i < 100; ++i) {
    const Rational a(random_bits(rng, 1 + rng.below(64)) + BigInt(1), random_bits(rng, 1 + rng.below(64)) + BigInt(1));
    const Rational y = halo::rat_inv_sqrt(a, cfg);
    const Rational res = (a * y * y - Rational(1)).abs();
    if (res > worst) worst = halo::simplify(res);
  }
  const bool ok = exp_err <= 3e-8 && softmax_bad == 0 && worst <= cfg.nr_tolerance;
  return {ok, "|rat_exp(1,10) - e| = " + fmt(exp_err) + "; softmax sums != 1: " + std::to_string(softmax_bad) +
                  "/1000; worst inv_sqrt residual " + fmt(halo::to_float(worst))};
}

Outcome scale() {
  const auto r = halo::bench::run_scale({}, {Regime::BF16, Regime::EXACT}, 42);
  const auto& bf = r.mean_error.at(Regime::BF16);
  const auto& ex = r.mean_error.at(Regime::EXACT);
  const bool ok = bf.at(24576) > bf.at(4096) && ex.at(4096) == 0.0 && ex.at(24576) == 0.0;
  return {ok, "BF16 mean error " + fmt(bf.at(4096)) + " at 4096, " + fmt(bf.at(24576)) + " at 24576; EXACT " +
                  fmt(ex.at(4096)) + ", " + fmt(ex.at(24576))};
}

Outcome needle() {
  halo::bench::NeedleConfig c;
  c.lengths = {128, 2048, 4096};
  const auto r = halo::bench::run_needle(c, {Regime::BF16, Regime::EXACT}, 42);
  const auto& ex = r.error.at(Regime::EXACT);
  const auto& bf = r.error.at(Regime::BF16);
  const bool ok = ex.at(128) == 0.0 && ex.at(2048) == 0.0 && ex.at(4096) == 0.0 && bf.at(4096) > bf.at(128);
  return {ok, "EXACT error " + fmt(ex.at(128)) + "/" + fmt(ex.at(2048)) + "/" + fmt(ex.at(4096)) +
                  " at L=128/2048/4096; BF16 " + fmt(bf.at(128)) + " -> " + fmt(bf.at(4096))};
}

Outcome gradient() {
  const auto r = halo::bench::run_gradient({}, {Regime::BF16, Regime::EXACT}, 42);
  const auto& bf = r.deviation.at(Regime::BF16);
  long first = -1;
  for (std::size_t l = 0; l < 100 && l < bf.size(); ++l)
    if (!(bf[l] <= 1.0)) {
      first = static_cast<long>(l + 1);
      break;
    }
  double exact_worst = 0.0;
  for (double v : r.deviation.at(Regime::EXACT)) exact_worst = std::max(exact_worst, v);
  const bool ok = first > 0 && exact_worst == 0.0;
  return {ok, "BF16 relative deviation first > 1 at depth " + std::to_string(first) + ", " + fmt(bf.at(99)) +
                  " at depth 100; EXACT max deviation " + fmt(exact_worst)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("halo_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* sub : {"a", "b"}) {
    const std::string out = (root / sub).string();
    const char* argv[] = {"halo", "all", "--seed", "42", "--out", out.c_str()};
    if (halo::cli::run(6, argv, sink, sink) != 0) return {false, "halo all failed: " + sink.str()};
  }
  std::size_t files = 0, differing = 0;
  std::uint64_t combined = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    const std::string a = slurp(e.path()), b = slurp(root / "b" / e.path().filename());
    if (fnv1a(a) != fnv1a(b) || a != b) ++differing;
    combined ^= fnv1a(a);
  }
  fs::remove_all(root);

  halo::InferenceConfig cfg;
  // Two positions so rows are split across workers. One block takes a grid
  // state to ~40k bits there, so the Ring runs every step.
  cfg.depth = 2;
  cfg.ring.interval = 1;
  cfg.dims.max_len = 3;
  const auto w = halo::make_weights(cfg.dims, cfg.scale_bits, cfg.seed);
  const std::vector<std::size_t> tokens = {1, 2};
  const auto one = halo::run_inference(tokens, cfg, w);
  std::size_t thread_mismatch = 0;
  for (unsigned t : {2u, 4u, 8u}) {
    cfg.threads = t;
    const auto r = halo::run_inference(tokens, cfg, w);
    if (!r.state.identical(one.state) || r.logits != one.logits) ++thread_mismatch;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(combined));
  const bool ok = files == 10 && differing == 0 && thread_mismatch == 0;
  return {ok, std::to_string(files) + " files, " + std::to_string(differing) + " differ (combined fnv1a " + hex +
                  "); run_inference mismatches across 2/4/8 threads: " + std::to_string(thread_mismatch)};
}

Outcome loss_ste() {
  halo::Rng rng(11);
  double worst = 0.0;
  const double h = 1e-5;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 1 + rng.below(8);
    const halo::LossConfig lc{Rational(1 + static_cast<std::int64_t>(rng.below(100)), 100),
                              Rational(1 + static_cast<std::int64_t>(rng.below(100)), 100)};
    std::vector<double> ze(n);
    std::vector<Rational> zq(n);
    for (std::size_t i = 0; i < n; ++i) {
      zq[i] = Rational(static_cast<std::int64_t>(rng.below(1025)) - 512, 256);
      // Keep |z_e - z_q| >= 1/64 so relative error is meaningful.
      const double off = (1.0 / 64 + rng.uniform01()) * (rng.below(2) ? 1 : -1);
      ze[i] = halo::to_float(zq[i]) + off;
    }
    const auto r = halo::ring_loss(ze, zq, lc);
    std::vector<double> zqf;
    for (const auto& q : zq) zqf.push_back(halo::to_float(q));
    const auto total = [&](const std::vector<double>& e, const std::vector<double>& q, double coeff) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += (e[i] - q[i]) * (e[i] - q[i]);
      return coeff * s;
    };
    const double beta = halo::to_float(lc.beta), gamma = halo::to_float(lc.gamma);
    for (std::size_t i = 0; i < n; ++i) {
      auto up = ze, dn = ze;
      up[i] += h;
      dn[i] -= h;
      const double fd_e = (total(up, zqf, gamma) - total(dn, zqf, gamma)) / (2 * h);
      auto qu = zqf, qd = zqf;
      qu[i] += h;
      qd[i] -= h;
      const double fd_q = (total(ze, qu, beta) - total(ze, qd, beta)) / (2 * h);
      worst = std::max({worst, std::fabs(r.grad_ze[i] - fd_e) / std::fabs(r.grad_ze[i]),
                        std::fabs(r.grad_zq[i] - fd_q) / std::fabs(r.grad_zq[i])});
    }
  }

  halo::RingConfig ring;
  std::size_t moved = 0;
  for (int c = 0; c < 100; ++c) {
    std::vector<double> ze(8);
    for (auto& v : ze) v = std::ldexp(static_cast<double>(rng.below(1 << 20)) - (1 << 19), -16);
    const auto p = halo::ste_project(ze, ring);
    for (std::size_t i = 0; i < ze.size(); ++i)
      if (p.z_q[i] != halo::from_double_exact(ze[i])) ++moved;
    if (halo::SteProjection::backward(ze) != ze) ++moved;
  }
  const bool ok = worst <= 1e-6 && moved == 0;
  return {ok, "worst relative gradient error " + fmt(worst) + " over 100 cases; on-grid points moved by STE: " +
                  std::to_string(moved)};
}

}  // namespace

int main() {
  report("exact associativity", associativity);
  report("1/3 identity", one_third);
  report("logistic survival", logistic);
  report("drift", drift);
  report("Ring boundedness at T=300", theorem_one);
  report("lazy-reduction headroom", headroom);
  report("DMR coverage", dmr);
  report("transcendental closure and accuracy", transcendental);
  report("scale instability", scale);
  report("needle recall", needle);
  report("gradient fidelity", gradient);
  report("determinism", determinism);
  report("loss and STE numerics", loss_ste);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
