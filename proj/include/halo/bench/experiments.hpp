#pragma once

// The desk-scale experiments. Each returns a CSV-ready table (regime-major,
// step-minor rows) together with the summary numbers the checks need.

#include "halo/bench/ball.hpp"
#include "halo/bench/csv.hpp"
#include "halo/eiu.hpp"
#include "halo/float_emu.hpp"
#include "halo/integrity.hpp"
#include "halo/net.hpp"
#include "halo/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace halo::bench {

inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols = {"experiment", "regime", "step", "error",
                                                "bits",       "seed",   "meta", "flag"};
  return cols;
}

/// Rows of ExperimentRecord plus experiment-specific trailing columns.
class RecordTable {
 public:
  RecordTable(std::string experiment, std::uint64_t seed, std::string meta, std::vector<std::string> extras = {})
      : experiment_(std::move(experiment)), seed_(seed), meta_(std::move(meta)), table_(header(extras)),
        n_extras_(extras.size()) {}

  void add(std::string_view regime, std::size_t step, double error, std::size_t bits,
           std::vector<std::string> extras = {}) {
    if (extras.size() != n_extras_) throw std::invalid_argument("RecordTable: wrong number of extra cells");
    if (error < 0) throw std::logic_error("RecordTable: negative error");
    std::vector<std::string> row = {experiment_, std::string(regime), std::to_string(step), format_double(error),
                                    std::to_string(bits), std::to_string(seed_), meta_, flag_for(error)};
    for (auto& e : extras) row.push_back(std::move(e));
    table_.add_row(std::move(row));
  }

  const Table& table() const { return table_; }
  Table& table() { return table_; }

 private:
  static std::vector<std::string> header(const std::vector<std::string>& extras) {
    std::vector<std::string> cols = record_columns();
    cols.insert(cols.end(), extras.begin(), extras.end());
    return cols;
  }
  static std::string flag_for(double e) {
    if (std::isnan(e)) return "nan";
    if (std::isinf(e)) return "overflow";
    return "ok";
  }

  std::string experiment_;
  std::uint64_t seed_;
  std::string meta_;
  Table table_;
  std::size_t n_extras_;
};

/// |lift(x) - q| collapsed to double; NaN/inf inputs propagate.
inline double abs_deviation(double x, const Rational& q) {
  if (!std::isfinite(x)) return std::isnan(x) ? x : HUGE_VAL;
  return to_float((from_double_exact(x) - q).abs());
}

inline std::string regime_names(const std::vector<Regime>& regimes) {
  std::string s;
  for (auto r : regimes) {
    if (!s.empty()) s += '+';
    s += regime(r).name;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Logistic map

struct LogisticConfig {
  Rational r = Rational(4);
  Rational x0 = Rational(1, 5);
  std::size_t steps = 2000;
  double survival_threshold = 0.01;
  std::size_t exact_bits_cap = 4096;  // materialize x_t while it fits
};

/// The exact trajectory of x -> r x (1 - x): literal rationals while they are
/// small, then a certified ball whose radius is checked against 2^-200.
class LogisticReference {
 public:
  LogisticReference(const Rational& r, const Rational& x0, std::size_t steps, std::size_t exact_bits_cap)
      : precision_(static_cast<int>(2 * steps + 320)) {
    Rational x = simplify(x0);
    bool exact = true;
    Ball ball = Ball::enclose(x, precision_);
    const Ball one = Ball::enclose(Rational(1), precision_);
    for (std::size_t t = 0; t <= steps; ++t) {
      if (exact && x.bits().total_bits > exact_bits_cap) exact = false;
      exact_.push_back(exact ? std::optional<Rational>(x) : std::nullopt);
      if (ball.radius() > kMaxRadius()) throw std::runtime_error("logistic reference: enclosure too wide");
      balls_.push_back(ball);
      if (t == steps) break;
      if (exact) x = simplify(r * x * (Rational(1) - x));
      ball = ball.scaled(r) * (one - ball);
    }
  }

  static const Rational& kMaxRadius() {
    static const Rational m = mul_pow2(Rational(1), -200);
    return m;
  }

  std::size_t size() const { return balls_.size(); }
  bool is_exact(std::size_t t) const { return exact_[t].has_value(); }
  const std::optional<Rational>& exact(std::size_t t) const { return exact_[t]; }
  const Ball& ball(std::size_t t) const { return balls_[t]; }
  /// The reference value: the literal rational, else the ball centre.
  const Rational& value(std::size_t t) const { return exact_[t] ? *exact_[t] : balls_[t].centre(); }
  int precision() const { return precision_; }

 private:
  int precision_;
  std::vector<std::optional<Rational>> exact_;
  std::vector<Ball> balls_;
};

/// One regime's trajectory with a rounding after every operation.
inline std::vector<double> logistic_float_trajectory(const Rational& r, const Rational& x0, std::size_t steps,
                                                     const PrecisionRegime& fmt) {
  const double rr = round_to(to_float(r), fmt);
  double x = round_to(to_float(x0), fmt);
  std::vector<double> out{x};
  for (std::size_t t = 0; t < steps; ++t) {
    const double a = emulated_mul(rr, x, fmt);
    const double b = emulated_add(1.0, -x, fmt);
    x = emulated_mul(a, b, fmt);
    out.push_back(x);
  }
  return out;
}

struct LogisticResult {
  Table table{{}};
  std::map<Regime, long> survival_step;  // -1: never crossed
  double exact_max_error = 0.0;
};

inline LogisticResult run_logistic(const LogisticConfig& c, const std::vector<Regime>& regimes, std::uint64_t seed) {
  if (c.x0.sign() <= 0 || c.x0 >= Rational(1)) throw std::invalid_argument("run_logistic: x0 must lie in (0, 1)");
  const LogisticReference ref(c.r, c.x0, c.steps, c.exact_bits_cap);
  std::ostringstream meta;
  meta << "r=" << c.r << ";x0=" << c.x0 << ";threshold=" << format_double(c.survival_threshold)
       << ";ref_precision=" << ref.precision();
  RecordTable rt("logistic", seed, meta.str(), {"repr", "value", "survival_step"});
  LogisticResult res;

  for (Regime rg : regimes) {
    const PrecisionRegime& fmt = regime(rg);
    std::vector<double> err(ref.size(), 0.0), val(ref.size(), 0.0);
    if (rg == Regime::EXACT) {
      for (std::size_t t = 0; t < ref.size(); ++t) val[t] = to_float(ref.value(t));
    } else {
      val = logistic_float_trajectory(c.r, c.x0, c.steps, fmt);
      for (std::size_t t = 0; t < ref.size(); ++t) err[t] = abs_deviation(val[t], ref.value(t));
    }
    long survival = -1;
    for (std::size_t t = 0; t < err.size(); ++t) {
      if (!(err[t] <= c.survival_threshold)) {
        survival = static_cast<long>(t);
        break;
      }
    }
    res.survival_step[rg] = survival;
    for (std::size_t t = 0; t < ref.size(); ++t) {
      const std::size_t bits = rg == Regime::EXACT && ref.is_exact(t) ? ref.exact(t)->bits().total_bits : 0;
      if (rg == Regime::EXACT) res.exact_max_error = std::max(res.exact_max_error, err[t]);
      rt.add(fmt.name, t, err[t], bits,
             {ref.is_exact(t) ? "exact" : "enclosure", format_double(val[t]), std::to_string(survival)});
    }
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// Gradient through the logistic chain

struct GradientConfig {
  Rational r = Rational(4);
  Rational x0 = Rational(1, 5);
  std::size_t depth = 200;
  std::size_t exact_bits_cap = 4096;
};

struct GradientResult {
  Table table{{}};
  std::map<Regime, std::vector<double>> deviation;  // index L-1 for depth L
};

/// d x_L / d x_0 = prod_{t<L} r (1 - 2 x_t), exact versus per-regime.
inline GradientResult run_gradient(const GradientConfig& c, const std::vector<Regime>& regimes, std::uint64_t seed) {
  if (c.depth < 1) throw std::invalid_argument("run_gradient: depth must be >= 1");
  const LogisticReference ref(c.r, c.x0, c.depth, c.exact_bits_cap);
  const int prec = ref.precision();
  const Ball one = Ball::enclose(Rational(1), prec);

  // Reference products: literal while every factor is literal, else a ball.
  std::vector<Rational> prod_value;
  std::vector<bool> prod_exact;
  Rational exact_prod(1);
  bool exact = true;
  Ball ball = one;
  for (std::size_t t = 0; t < c.depth; ++t) {
    ball = ball * (one - ref.ball(t).scaled(Rational(2))).scaled(c.r);
    if (ball.relative_radius() > LogisticReference::kMaxRadius())
      throw std::runtime_error("gradient reference: enclosure too wide");
    exact = exact && ref.is_exact(t);
    if (exact) exact_prod = simplify(exact_prod * c.r * (Rational(1) - Rational(2) * *ref.exact(t)));
    if (exact && exact_prod.bits().total_bits > c.exact_bits_cap) exact = false;
    prod_value.push_back(exact ? exact_prod : ball.centre());
    prod_exact.push_back(exact);
  }

  std::ostringstream meta;
  meta << "r=" << c.r << ";x0=" << c.x0 << ";ref_precision=" << prec;
  RecordTable rt("gradient", seed, meta.str(), {"repr", "value"});
  GradientResult res;
  for (Regime rg : regimes) {
    const PrecisionRegime& fmt = regime(rg);
    std::vector<double>& dev = res.deviation[rg];
    if (rg == Regime::EXACT) {
      for (std::size_t l = 1; l <= c.depth; ++l) {
        dev.push_back(0.0);
        rt.add(fmt.name, l, 0.0, prod_exact[l - 1] ? prod_value[l - 1].bits().total_bits : 0,
               {prod_exact[l - 1] ? "exact" : "enclosure", format_double(to_float(prod_value[l - 1]))});
      }
      continue;
    }
    const std::vector<double> xs = logistic_float_trajectory(c.r, c.x0, c.depth, fmt);
    const double rr = round_to(to_float(c.r), fmt);
    double p = 1.0;
    for (std::size_t l = 1; l <= c.depth; ++l) {
      const double x = xs[l - 1];
      const double factor = emulated_mul(rr, emulated_add(1.0, -emulated_mul(2.0, x, fmt), fmt), fmt);
      p = emulated_mul(p, factor, fmt);
      const Rational& ex = prod_value[l - 1];
      double d;
      if (!std::isfinite(p)) d = std::isnan(p) ? p : HUGE_VAL;
      else d = to_float((from_double_exact(p) - ex).abs() / ex.abs());
      dev.push_back(d);
      rt.add(fmt.name, l, d, 0, {prod_exact[l - 1] ? "exact" : "enclosure", format_double(p)});
    }
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// Semantic drift: h <- W h

struct DriftConfig {
  std::size_t dim = 64;
  std::size_t steps = 500;
  double sigma_target = 1.01;
  int grid_bits = 32;  // W lives on the 2^-32 grid; each regime stores its own rounding of W
  double error_threshold = 1e-4;
};

/// Largest singular value by power iteration on W^T W (symmetric W: |lambda|max).
inline double estimate_sigma_max(const std::vector<double>& w, std::size_t n) {
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), u(n), z(n);
  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += w[i * n + j] * v[j];
      u[i] = s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += w[i * n + j] * u[i];
      z[j] = s;
    }
    double norm = 0;
    for (double x : z) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0) return 0.0;
    for (std::size_t j = 0; j < n; ++j) v[j] = z[j] / norm;
    sigma = std::sqrt(norm);
  }
  return sigma;
}

/// Symmetric matrix on the 2^-grid_bits dyadic grid whose estimated largest
/// singular value is within [0.99, 1.01] and as close to the target as
/// rounding allows.
inline std::vector<double> drift_matrix(std::size_t n, double target, int grid_bits, Rng& rng, double* sigma_out) {
  std::vector<double> base(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) base[i * n + j] = base[j * n + i] = rng.uniform(-1.0, 1.0);
  double scale = target / estimate_sigma_max(base, n);
  std::vector<double> w(n * n);
  double sigma = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (std::size_t k = 0; k < n * n; ++k) w[k] = std::ldexp(std::nearbyint(std::ldexp(base[k] * scale, grid_bits)), -grid_bits);
    sigma = estimate_sigma_max(w, n);
    if (sigma >= 0.99 && sigma <= 1.01) break;
    scale *= (std::clamp(target, 0.99, 1.01) - 0.001 * (attempt + 1)) / sigma;
  }
  if (sigma < 0.99 || sigma > 1.01) throw std::runtime_error("drift_matrix: could not normalize spectrum");
  if (sigma_out) *sigma_out = sigma;
  return w;
}

inline std::vector<double> emulated_matvec(const std::vector<double>& w, const std::vector<double>& h,
                                           const PrecisionRegime& fmt) {
  const std::size_t n = h.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc = emulated_add(acc, emulated_mul(w[i * n + j], h[j], fmt), fmt);
    out[i] = acc;
  }
  return out;
}

inline double max_deviation(const std::vector<double>& x, const RationalTensor& exact) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = abs_deviation(x[i], exact.data()[i]);
    if (std::isnan(d)) return d;
    m = std::max(m, d);
  }
  return m;
}

inline RationalTensor lift_matrix(const std::vector<double>& w, std::size_t rows, std::size_t cols) {
  std::vector<Rational> data;
  data.reserve(w.size());
  for (double x : w) data.push_back(from_double_exact(x));
  return RationalTensor(rows, cols, std::move(data));
}

struct DriftResult {
  Table table{{}};
  std::map<Regime, long> first_exceed;  // first step with error > threshold, -1 if never
  double sigma = 0.0;
  double exact_max_error = 0.0;
};

inline DriftResult run_drift(const DriftConfig& c, const std::vector<Regime>& regimes, std::uint64_t seed) {
  if (c.dim < 2) throw std::invalid_argument("run_drift: dim must be >= 2");
  Rng rng(seed);
  DriftResult res;
  const std::vector<double> w = drift_matrix(c.dim, c.sigma_target, c.grid_bits, rng, &res.sigma);
  std::vector<double> h0(c.dim);
  for (auto& x : h0) x = round_to(rng.uniform(-1.0, 1.0), kBF16);

  // Exact trajectory.
  const RationalTensor wq = lift_matrix(w, c.dim, c.dim);
  std::vector<RationalTensor> exact{lift_matrix(h0, c.dim, 1)};
  for (std::size_t t = 0; t < c.steps; ++t) exact.push_back(rational_matmul(wq, exact.back()));

  std::ostringstream meta;
  meta << "dim=" << c.dim << ";sigma=" << format_double(res.sigma) << ";grid_bits=" << c.grid_bits
       << ";threshold=" << format_double(c.error_threshold);
  RecordTable rt("drift", seed, meta.str());
  for (Regime rg : regimes) {
    const PrecisionRegime& fmt = regime(rg);
    long first = -1;
    std::vector<double> h = h0;
    std::vector<double> w_stored = w;
    if (rg != Regime::EXACT)
      for (auto& x : w_stored) x = round_to(x, fmt);
    for (std::size_t t = 0; t <= c.steps; ++t) {
      if (t > 0 && rg != Regime::EXACT) h = emulated_matvec(w_stored, h, fmt);
      const double err = rg == Regime::EXACT ? 0.0 : max_deviation(h, exact[t]);
      if (first < 0 && !(err <= c.error_threshold)) first = static_cast<long>(t);
      if (rg == Regime::EXACT) res.exact_max_error = std::max(res.exact_max_error, err);
      rt.add(fmt.name, t, err, rg == Regime::EXACT ? exact[t].max_bits() : 0);
    }
    res.first_exceed[rg] = first;
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// Needle in a haystack: recover h_0 from A^L h_0

struct NeedleConfig {
  std::vector<std::size_t> lengths = {128, 512, 1024, 2048, 4096};
  std::size_t dim = 16;
  std::int64_t ring_interval = 100;
  std::int64_t grid_bound = 65536;
};

/// Sylvester Hadamard matrix of order n (a power of two).
inline std::vector<int> hadamard(std::size_t n) {
  std::vector<int> h{1};
  for (std::size_t m = 1; m < n; m *= 2) {
    std::vector<int> next(4 * m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const int v = h[i * m + j];
        next[i * 2 * m + j] = v;
        next[i * 2 * m + j + m] = v;
        next[(i + m) * 2 * m + j] = v;
        next[(i + m) * 2 * m + j + m] = -v;
      }
    h = std::move(next);
  }
  return h;
}

/// Random orthogonal dyadic matrix S1 P1 (H / sqrt n) P2 S2. Requires n a
/// power of four so sqrt n is a power of two.
inline std::vector<double> orthogonal_dyadic(std::size_t n, Rng& rng) {
  std::size_t root = 1;
  while (root * root < n) root *= 2;
  if (root * root != n) throw std::invalid_argument("needle: dim must be a power of four");
  const std::vector<int> h = hadamard(n);
  const auto p1 = rng.permutation(n), p2 = rng.permutation(n);
  std::vector<int> s1(n), s2(n);
  for (auto& s : s1) s = rng.below(2) ? 1 : -1;
  for (auto& s : s2) s = rng.below(2) ? 1 : -1;
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a[i * n + j] = s1[i] * s2[j] * h[p1[i] * n + p2[j]] / static_cast<double>(root);
  return a;
}

/// m^e by repeated squaring, simplified after every product.
inline RationalTensor matrix_power(const RationalTensor& m, std::size_t e) {
  RationalTensor result = RationalTensor::identity(m.rows());
  RationalTensor base = m;
  while (e > 0) {
    if (e & 1) result = simplify(rational_matmul(result, base));
    e >>= 1;
    if (e) base = simplify(rational_matmul(base, base));
  }
  return result;
}

struct NeedleResult {
  Table table{{}};
  std::map<Regime, std::map<std::size_t, double>> error;  // regime -> L -> error
};

inline NeedleResult run_needle(const NeedleConfig& c, const std::vector<Regime>& regimes, std::uint64_t seed) {
  if (c.dim < 2) throw std::invalid_argument("run_needle: dim must be >= 2");
  Rng rng(seed);
  const std::vector<double> a = orthogonal_dyadic(c.dim, rng);
  // BF16 entries that also lie on the 2^-16 grid.
  std::vector<double> h0(c.dim);
  for (auto& x : h0) x = std::ldexp(std::nearbyint(std::ldexp(round_to(rng.uniform(-1.0, 1.0), kBF16), 16)), -16);

  const RationalTensor aq = lift_matrix(a, c.dim, c.dim);
  const RationalTensor a_inv = aq.transpose();  // orthogonal
  if (!(simplify(rational_matmul(aq, a_inv)) == RationalTensor::identity(c.dim)))
    throw std::logic_error("needle: A is not orthogonal");
  const RationalTensor h0q = lift_matrix(h0, c.dim, 1);

  std::vector<std::size_t> lengths = c.lengths;
  std::sort(lengths.begin(), lengths.end());
  const std::size_t max_len = lengths.empty() ? 0 : lengths.back();

  RingConfig ring;
  ring.interval = c.ring_interval;
  ring.d_max = BigInt(c.grid_bound);

  // Exact forward pass with GCD re-grounding every K steps.
  std::map<std::size_t, RationalTensor> exact_at;
  {
    RationalTensor h = h0q;
    std::size_t next = 0;
    for (std::size_t t = 0; t <= max_len; ++t) {
      if (t > 0) {
        h = rational_matmul(aq, h);
        if (t % static_cast<std::size_t>(c.ring_interval) == 0) h = simplify(h);
      }
      while (next < lengths.size() && lengths[next] == t) exact_at[t] = h, ++next;
    }
  }
  std::map<std::size_t, RationalTensor> inverse_power;
  for (std::size_t l : lengths) inverse_power[l] = matrix_power(a_inv, l);

  std::ostringstream meta;
  meta << "dim=" << c.dim << ";ring_k=" << c.ring_interval << ";d_max=" << c.grid_bound;
  RecordTable rt("needle", seed, meta.str());
  NeedleResult res;
  for (Regime rg : regimes) {
    const PrecisionRegime& fmt = regime(rg);
    std::map<std::size_t, std::vector<double>> float_at;
    if (rg != Regime::EXACT) {
      std::vector<double> h = h0;
      std::size_t next = 0;
      for (std::size_t t = 0; t <= max_len; ++t) {
        if (t > 0) h = emulated_matvec(a, h, fmt);
        while (next < lengths.size() && lengths[next] == t) float_at[t] = h, ++next;
      }
    }
    for (std::size_t l : lengths) {
      double err = 0.0;
      std::size_t bits = 0;
      if (rg == Regime::EXACT) {
        const RationalTensor back = rational_matmul(inverse_power[l], exact_at[l]);
        const RationalTensor grounded = the_ring(back, ring).value;
        bits = exact_at[l].max_bits();
        for (std::size_t i = 0; i < c.dim; ++i)
          err = std::max(err, to_float((grounded.data()[i] - h0q.data()[i]).abs()));
      } else {
        const std::vector<double>& hl = float_at[l];
        bool finite = true;
        for (double x : hl) finite = finite && std::isfinite(x);
        if (!finite) {
          err = HUGE_VAL;
        } else {
          const RationalTensor back = rational_matmul(inverse_power[l], lift_matrix(hl, c.dim, 1));
          for (std::size_t i = 0; i < c.dim; ++i)
            err = std::max(err, to_float((back.data()[i] - h0q.data()[i]).abs()));
        }
      }
      res.error[rg][l] = err;
      rt.add(fmt.name, l, err, bits);
    }
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// Width scaling: sequential sums of d BF16 values

struct ScaleConfig {
  std::vector<std::size_t> widths = {1024, 4096, 24576};
  std::size_t seeds = 100;
};

struct ScaleResult {
  Table table{{}};
  std::map<Regime, std::map<std::size_t, double>> mean_error;
};

inline ScaleResult run_scale(const ScaleConfig& c, const std::vector<Regime>& regimes, std::uint64_t seed) {
  for (std::size_t w : c.widths)
    if (w < 2) throw std::invalid_argument("run_scale: widths must be >= 2");
  if (c.seeds == 0) throw std::invalid_argument("run_scale: seeds must be >= 1");
  std::ostringstream meta;
  meta << "seeds=" << c.seeds << ";summands=bf16_unit_interval";
  RecordTable rt("scale", seed, meta.str(), {"seeds"});
  ScaleResult res;

  // sums[w][s] = exact sum; values regenerated per (w, s) from a derived seed.
  const auto values_for = [&](std::size_t w, std::size_t s) {
    Rng rng(seed + 1000003ULL * s + w);
    std::vector<double> v(w);
    for (auto& x : v) x = round_to(rng.uniform01(), kBF16);
    return v;
  };
  std::map<std::size_t, std::vector<Rational>> exact;
  std::map<std::size_t, std::size_t> exact_bits;
  for (std::size_t w : c.widths) {
    for (std::size_t s = 0; s < c.seeds; ++s) {
      const auto v = values_for(w, s);
      std::vector<Rational> lifted;
      lifted.reserve(w);
      for (double x : v) lifted.push_back(from_double_exact(x));
      exact[w].push_back(sum_exact(lifted));
      exact_bits[w] = std::max(exact_bits[w], exact[w].back().bits().total_bits);
    }
  }
  for (Regime rg : regimes) {
    const PrecisionRegime& fmt = regime(rg);
    for (std::size_t w : c.widths) {
      double total = 0.0;
      if (rg != Regime::EXACT) {
        std::vector<std::size_t> order(w);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t s = 0; s < c.seeds; ++s) {
          const auto v = values_for(w, s);
          total += abs_deviation(reduce_ordered(v, order, fmt), exact[w][s]);
        }
      }
      const double mean = total / static_cast<double>(c.seeds);
      res.mean_error[rg][w] = mean;
      rt.add(fmt.name, w, mean, rg == Regime::EXACT ? exact_bits[w] : 0, {std::to_string(c.seeds)});
    }
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// Ring cost: bit-width with and without periodic re-grounding

struct RingCostConfig {
  std::size_t steps = 300;
  InferenceConfig model;  // ring.interval is K
  std::vector<std::size_t> tokens = {1};
};

struct RingCostResult {
  Table table{{}};
  std::vector<StepBits> with_ring, without_ring;
  BoundednessReport bound;
};

inline RingCostResult run_ring_cost(const RingCostConfig& c, std::uint64_t seed) {
  if (c.steps < static_cast<std::size_t>(c.model.ring.interval))
    throw std::invalid_argument("run_ring_cost: steps must be >= K");
  InferenceConfig cfg = c.model;
  cfg.depth = c.steps;
  cfg.seed = seed;
  const ModelWeights w = make_weights(cfg.dims, cfg.scale_bits, seed);
  RingCostResult res;
  cfg.ring.enabled = false;
  res.without_ring = run_inference(c.tokens, cfg, w).trace;
  cfg.ring.enabled = true;
  res.with_ring = run_inference(c.tokens, cfg, w).trace;
  res.bound = check_boundedness(res.with_ring, cfg.ring);

  std::ostringstream meta;
  meta << "d_model=" << cfg.dims.d_model << ";K=" << cfg.ring.interval << ";d_max=" << cfg.ring.d_max.to_string()
       << ";tokens=" << c.tokens.size() << ";B_ring=" << res.bound.b_ring << ";alpha_obs=" << res.bound.alpha_obs;
  RecordTable rt("ringcost", seed, meta.str(), {"ring", "pre_ring_bits", "register_bits", "ring_applied"});
  for (const auto* trace : {&res.without_ring, &res.with_ring}) {
    const bool on = trace == &res.with_ring;
    for (const auto& s : *trace) {
      rt.add("exact", s.step, 0.0, s.widest.total_bits,
             {on ? "on" : "off", std::to_string(s.pre_ring.total_bits), std::to_string(s.register_bits),
              s.ring_applied ? "1" : "0"});
    }
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// Associativity under permuted reduction orders

struct AssociativityConfig {
  std::size_t n = 64;
  std::size_t trials = 100;
};

/// Separates BF16 reduction orders: 1 + 2^-8 is a tie that rounds back to 1.
inline std::vector<double> associativity_witness() { return {1.0, 0x1.0p-8, 0x1.0p-8, -1.0}; }

struct AssociativityResult {
  Table table{{}};
  std::map<std::string, std::map<Regime, std::size_t>> distinct;  // sequence -> regime -> count
};

inline AssociativityResult run_associativity(const AssociativityConfig& c, const std::vector<Regime>& regimes,
                                             std::uint64_t seed) {
  if (c.n < 3) throw std::invalid_argument("run_associativity: n must be >= 3");
  Rng rng(seed);
  std::vector<double> values(c.n);
  for (auto& x : values) {
    const int e = static_cast<int>(rng.below(24)) - 12;
    x = round_to(std::ldexp(rng.uniform(-1.0, 1.0), e), kBF16);
  }
  std::vector<std::vector<std::size_t>> orders;
  for (std::size_t t = 0; t < c.trials; ++t) orders.push_back(rng.permutation(c.n));

  std::vector<std::vector<std::size_t>> witness_orders;
  if (c.trials > 0) {
    std::vector<std::size_t> p{0, 1, 2, 3};
    do witness_orders.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
  }

  std::ostringstream meta;
  meta << "n=" << c.n << ";trials=" << c.trials;
  RecordTable rt("associativity", seed, meta.str(), {"sequence", "distinct_results"});
  AssociativityResult res;
  const std::vector<double> witness = associativity_witness();

  for (Regime rg : regimes) {
    const PrecisionRegime& fmt = regime(rg);
    struct Sequence {
      std::string name;
      const std::vector<double>* seq;
      const std::vector<std::vector<std::size_t>>* ords;
    };
    for (const auto& [name, seq, ords] :
         {Sequence{"random", &values, &orders}, Sequence{"witness", &witness, &witness_orders}}) {
      if (ords->empty()) continue;
      std::vector<Rational> lifted;
      for (double x : *seq) lifted.push_back(from_double_exact(x));
      const Rational exact = sum_exact(lifted);
      double worst = 0.0;
      std::size_t distinct = 0;
      if (rg == Regime::EXACT) {
        std::vector<Rational> seen;
        for (const auto& ord : *ords) {
          std::vector<Rational> permuted;
          for (std::size_t i : ord) permuted.push_back(lifted[i]);
          const Rational s = sum_exact(permuted);
          if (std::none_of(seen.begin(), seen.end(), [&](const Rational& q) { return q.identical(s); }))
            seen.push_back(s);
          worst = std::max(worst, to_float((s - exact).abs()));
        }
        distinct = seen.size();
      } else {
        std::set<double> seen;
        for (const auto& ord : *ords) {
          const double s = reduce_ordered(*seq, ord, fmt);
          seen.insert(s);
          worst = std::max(worst, abs_deviation(s, exact));
        }
        distinct = seen.size();
      }
      res.distinct[name][rg] = distinct;
      rt.add(fmt.name, ords->size(), worst, rg == Regime::EXACT ? exact.bits().total_bits : 0,
             {name, std::to_string(distinct)});
    }
  }
  res.table = rt.table();
  return res;
}

// ---------------------------------------------------------------------------
// DMR fault-injection campaign

struct DmrConfig {
  std::size_t operand_bits = 256;
  std::size_t single_bit_positions = 512;
  std::size_t bursts = 100000;
  std::size_t burst_window = 64;
  std::size_t burst_min = 2;
  std::size_t burst_max = 8;
};

inline BigInt random_bigint(Rng& rng, std::size_t bits) {
  BigInt v(0);
  for (std::size_t done = 0; done < bits; done += 32) {
    v <<= 32;
    v += BigInt(static_cast<std::int64_t>(rng.next() >> 32));
  }
  return v >> ((bits + 31) / 32 * 32 - bits);
}

struct DmrResult {
  Table table{{"trial", "kind", "bits_flipped", "error_mod_m1", "error_mod_m2", "detected"}};
  std::size_t single_total = 0, single_detected = 0;
  std::size_t burst_total = 0, burst_undetected = 0, burst_undetected_not_congruent = 0;
  bool collision_detected = true;
};

inline DmrResult run_dmr(const DmrConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  const BigInt a = random_bigint(rng, c.operand_bits) + BigInt::pow2(c.operand_bits - 1);
  const BigInt b = random_bigint(rng, c.operand_bits) + BigInt::pow2(c.operand_bits - 1);
  const BigInt prod = a * b;
  const BigInt m1m2 = BigInt(static_cast<std::int64_t>(kM1)) * BigInt(static_cast<std::int64_t>(kM2));
  DmrResult res;
  std::size_t trial = 0;

  const auto record = [&](const std::string& kind, std::size_t flips, const BigInt& corrupted) {
    const FaultReport f = dmr_check(a, b, corrupted, CheckKind::mul);
    const ResiduePair e = residues(f.injected_error);
    res.table.add_row({std::to_string(trial++), kind, std::to_string(flips), std::to_string(e.r1),
                       std::to_string(e.r2), f.detected ? "1" : "0"});
    return f;
  };

  for (std::size_t p = 0; p < c.single_bit_positions; ++p) {
    ++res.single_total;
    if (record("single", 1, inject_fault(prod, std::vector<std::size_t>{p})).detected) ++res.single_detected;
  }
  const std::size_t span = c.single_bit_positions > c.burst_window ? c.single_bit_positions - c.burst_window : 0;
  for (std::size_t i = 0; i < c.bursts; ++i) {
    const std::size_t start = rng.below(span + 1);
    const std::size_t k = c.burst_min + rng.below(c.burst_max - c.burst_min + 1);
    auto perm = rng.permutation(c.burst_window);
    std::vector<std::size_t> bits(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(k));
    for (auto& p : bits) p += start;
    const FaultReport f = record("burst", k, inject_fault(prod, bits));
    ++res.burst_total;
    if (!f.detected) {
      ++res.burst_undetected;
      if (!BigInt::divides(m1m2, f.injected_error)) ++res.burst_undetected_not_congruent;
    }
  }
  res.collision_detected = record("collision", 0, prod + m1m2).detected;
  return res;
}

// ---------------------------------------------------------------------------
// Lazy-reduction pipeline replay

struct PipelineConfig {
  std::size_t dim = 64;
  std::size_t steps = 200;
  unsigned scale_bits = 16;
  EiuConfig eiu;
};

struct PipelineResult {
  Table table{{"step", "live_bits", "pending_jobs", "stalled", "reduced_this_step"}};
  PipelineStats stats;
  std::vector<StepBits> trace;
};

inline PipelineResult run_pipeline(const PipelineConfig& c, std::uint64_t seed) {
  PipelineResult res;
  res.trace = light_chain_trace(c.dim, c.steps, c.scale_bits, seed);
  res.stats = simulate_pipeline(res.trace, c.eiu);
  for (const auto& r : res.stats.rows) {
    res.table.add_row({std::to_string(r.step), std::to_string(r.live_bits), std::to_string(r.pending_jobs),
                       r.stalled ? "1" : "0", std::to_string(r.reduced_this_step)});
  }
  return res;
}

}  // namespace halo::bench
