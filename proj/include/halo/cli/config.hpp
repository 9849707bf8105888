#pragma once

// Flat `key = value` run configuration. Resolution order is defaults, then
// the config file, then command-line flags. Unknown keys are errors.

#include "halo/bench/experiments.hpp"
#include "halo/rational.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace halo::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueKind { uint, real, rational, uint_list, regimes, denoiser };

struct KeySpec {
  std::string key;
  ValueKind kind;
  std::string default_value;
  std::string help;
};

inline const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"seed", ValueKind::uint, "42", "RNG seed for every experiment"},
      {"regimes", ValueKind::regimes, "bf16,fp32,exact", "precision regimes to compare"},
      {"threads", ValueKind::uint, "1", "worker threads for rational matmul"},
      {"taylor.n", ValueKind::uint, "8", "Taylor order of the rational exponential"},
      {"logistic.steps", ValueKind::uint, "2000", "logistic map iterations"},
      {"logistic.r", ValueKind::rational, "4", "logistic growth rate"},
      {"logistic.x0", ValueKind::rational, "1/5", "logistic initial state"},
      {"logistic.survival_threshold", ValueKind::real, "0.01", "error that ends survival"},
      {"logistic.exact_bits_cap", ValueKind::uint, "4096", "largest literal reference value (bits)"},
      {"drift.dim", ValueKind::uint, "64", "state width"},
      {"drift.steps", ValueKind::uint, "500", "matrix-vector steps"},
      {"drift.sigma", ValueKind::real, "1.01", "target largest singular value"},
      {"drift.grid_bits", ValueKind::uint, "32", "W lies on the 2^-grid_bits grid"},
      {"drift.threshold", ValueKind::real, "0.0001", "reported crossing threshold"},
      {"gradient.depth", ValueKind::uint, "200", "chain depth"},
      {"needle.lengths", ValueKind::uint_list, "128,512,1024,2048,4096", "context lengths L"},
      {"needle.dim", ValueKind::uint, "16", "state width (a power of four)"},
      {"needle.ring_k", ValueKind::uint, "100", "re-grounding interval on the exact path"},
      {"needle.dmax", ValueKind::uint, "65536", "grid denominator bound at readout"},
      {"scale.widths", ValueKind::uint_list, "1024,4096,24576", "summation widths"},
      {"scale.seeds", ValueKind::uint, "100", "repetitions per width"},
      {"ringcost.steps", ValueKind::uint, "300", "recurrent depth T"},
      {"ring.k", ValueKind::uint, "50", "Ring interval K"},
      {"ring.dmax", ValueKind::uint, "65536", "grid denominator bound"},
      {"ring.eps", ValueKind::rational, "1e-16", "projection tolerance"},
      {"ring.denoiser", ValueKind::denoiser, "identity", "identity or round-through-float"},
      {"model.d_model", ValueKind::uint, "32", "model width"},
      {"model.d_ff", ValueKind::uint, "32", "feed-forward width"},
      {"model.vocab", ValueKind::uint, "16", "vocabulary size"},
      {"model.scale_bits", ValueKind::uint, "16", "lift scale S = 2^scale_bits"},
      {"model.tokens", ValueKind::uint, "1", "sequence length of the inference runs"},
      {"associativity.n", ValueKind::uint, "64", "values per sequence"},
      {"associativity.trials", ValueKind::uint, "100", "random permutations"},
      {"dmr.operand_bits", ValueKind::uint, "256", "operand width (product is twice this)"},
      {"dmr.bursts", ValueKind::uint, "100000", "random multi-bit bursts"},
      {"pipeline.steps", ValueKind::uint, "200", "matmul steps replayed"},
      {"pipeline.dim", ValueKind::uint, "64", "matmul chain width"},
      {"eiu.budget_bits", ValueKind::uint, "1024", "register budget"},
      {"eiu.threshold", ValueKind::rational, "3/4", "reduction trigger as a fraction of the budget"},
      {"eiu.gcd_rate", ValueKind::uint, "64", "GCD engine throughput, bits per cycle (0 disables)"},
      {"eiu.matmul_cycles", ValueKind::uint, "64", "cycles per matmul step"},
      {"eiu.queue_depth", ValueKind::uint, "4", "pending reduction capacity"},
  };
  return specs;
}

inline const KeySpec* find_key(std::string_view key) {
  for (const auto& s : key_specs())
    if (s.key == key) return &s;
  return nullptr;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Exact value of "n/d", "n", or a decimal such as "-0.25" or "1e-16".
inline Rational parse_exact(std::string_view text) {
  const std::string s = trim(text);
  if (s.find('/') != std::string::npos) {
    const Rational q = Rational::parse(s);
    return simplify(q);
  }
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
  std::string digits;
  long exp10 = 0;
  bool any = false, dot = false;
  for (; i < s.size(); ++i) {
    const char ch = s[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      digits += ch;
      any = true;
      if (dot) --exp10;
    } else if (ch == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (!any) throw std::invalid_argument("not a number: " + s);
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw std::invalid_argument("not a number: " + s);
    const std::string e = s.substr(i + 1);
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(e, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad exponent: " + s);
    }
    if (used != e.size()) throw std::invalid_argument("bad exponent: " + s);
    exp10 += v;
  }
  BigInt n = BigInt::from_string(digits);
  if (neg) n = -n;
  const BigInt p = BigInt::pow(BigInt(10), static_cast<unsigned long>(exp10 < 0 ? -exp10 : exp10));
  return simplify(exp10 < 0 ? Rational(n, p) : Rational(n * p));
}

inline std::uint64_t parse_uint(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw std::invalid_argument("integer out of range: " + s);
  }
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::vector<Regime> parse_regimes(std::string_view text) {
  std::vector<Regime> out;
  for (const auto& name : split_list(text)) {
    const Regime r = parse_regime(name).id;
    if (std::find(out.begin(), out.end(), r) != out.end()) throw std::invalid_argument("duplicate regime: " + name);
    out.push_back(r);
  }
  return out;
}

inline std::vector<std::size_t> parse_uint_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& v : split_list(text)) out.push_back(parse_uint(v));
  return out;
}

/// Throws std::invalid_argument when `value` does not parse as `kind`.
inline void validate_value(ValueKind kind, std::string_view value) {
  switch (kind) {
    case ValueKind::uint: (void)parse_uint(value); break;
    case ValueKind::real: {
      const std::string s = trim(value);
      std::size_t used = 0;
      (void)std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("expected a number, got '" + s + "'");
      break;
    }
    case ValueKind::rational: (void)parse_exact(value); break;
    case ValueKind::uint_list: (void)parse_uint_list(value); break;
    case ValueKind::regimes: (void)parse_regimes(value); break;
    case ValueKind::denoiser: {
      const std::string s = trim(value);
      if (s != "identity" && s != "round-through-float")
        throw std::invalid_argument("denoiser must be identity or round-through-float");
      break;
    }
  }
}

/// Resolved key -> value text.
class Config {
 public:
  Config() {
    for (const auto& s : key_specs()) values_[s.key] = s.default_value;
  }

  void set(const std::string& key, const std::string& value, const std::string& where = "") {
    const KeySpec* spec = find_key(key);
    const std::string prefix = where.empty() ? "" : where + ": ";
    if (!spec) throw ConfigError(prefix + "unknown key '" + key + "'");
    try {
      validate_value(spec->kind, value);
    } catch (const std::exception& e) {
      throw ConfigError(prefix + "bad value for '" + key + "': " + e.what());
    }
    values_[key] = trim(value);
  }

  /// Applies a flat config file. Errors name the file and line.
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    load_stream(in, path);
  }

  void load_stream(std::istream& in, const std::string& name) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::string where = name + ":" + std::to_string(line_no);
      std::string body = line.substr(0, line.find('#'));
      body = trim(body);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key.empty()) throw ConfigError(where + ": missing key");
      set(key, value, where);
    }
  }

  const std::string& text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
  }
  std::uint64_t get_uint(const std::string& key) const { return parse_uint(text(key)); }
  double get_real(const std::string& key) const { return std::stod(text(key)); }
  Rational get_rational(const std::string& key) const { return parse_exact(text(key)); }
  std::vector<std::size_t> get_uint_list(const std::string& key) const { return parse_uint_list(text(key)); }
  std::vector<Regime> get_regimes(const std::string& key) const { return parse_regimes(text(key)); }

  /// Every key in declaration order; loading this back reproduces the config.
  void write(std::ostream& os) const {
    for (const auto& s : key_specs()) os << s.key << " = " << values_.at(s.key) << '\n';
  }

 private:
  std::map<std::string, std::string> values_;
};

// Typed views used by the experiments.

inline TranscendConfig transcend_config(const Config& c) {
  TranscendConfig t;
  t.taylor_order = static_cast<unsigned>(c.get_uint("taylor.n"));
  t.validate();
  return t;
}

inline RingConfig ring_config(const Config& c) {
  RingConfig r;
  r.interval = static_cast<std::int64_t>(c.get_uint("ring.k"));
  r.d_max = BigInt(static_cast<std::int64_t>(c.get_uint("ring.dmax")));
  r.eps = c.get_rational("ring.eps");
  r.denoiser = c.text("ring.denoiser") == "identity" ? Denoiser::identity : Denoiser::round_through_float;
  r.validate();
  return r;
}

inline EiuConfig eiu_config(const Config& c) {
  EiuConfig e;
  e.register_bits = c.get_uint("eiu.budget_bits");
  e.threshold = c.get_rational("eiu.threshold");
  e.gcd_bits_per_cycle = c.get_uint("eiu.gcd_rate");
  e.matmul_cycles_per_step = c.get_uint("eiu.matmul_cycles");
  e.queue_depth = c.get_uint("eiu.queue_depth");
  e.validate();
  return e;
}

inline bench::LogisticConfig logistic_config(const Config& c) {
  bench::LogisticConfig l;
  l.r = c.get_rational("logistic.r");
  l.x0 = c.get_rational("logistic.x0");
  l.steps = c.get_uint("logistic.steps");
  l.survival_threshold = c.get_real("logistic.survival_threshold");
  l.exact_bits_cap = c.get_uint("logistic.exact_bits_cap");
  return l;
}

inline bench::DriftConfig drift_config(const Config& c) {
  bench::DriftConfig d;
  d.dim = c.get_uint("drift.dim");
  d.steps = c.get_uint("drift.steps");
  d.sigma_target = c.get_real("drift.sigma");
  d.grid_bits = static_cast<int>(c.get_uint("drift.grid_bits"));
  d.error_threshold = c.get_real("drift.threshold");
  return d;
}

inline bench::GradientConfig gradient_config(const Config& c) {
  bench::GradientConfig g;
  g.r = c.get_rational("logistic.r");
  g.x0 = c.get_rational("logistic.x0");
  g.depth = c.get_uint("gradient.depth");
  g.exact_bits_cap = c.get_uint("logistic.exact_bits_cap");
  return g;
}

inline bench::NeedleConfig needle_config(const Config& c) {
  bench::NeedleConfig n;
  n.lengths = c.get_uint_list("needle.lengths");
  n.dim = c.get_uint("needle.dim");
  n.ring_interval = static_cast<std::int64_t>(c.get_uint("needle.ring_k"));
  n.grid_bound = static_cast<std::int64_t>(c.get_uint("needle.dmax"));
  return n;
}

inline bench::ScaleConfig scale_config(const Config& c) {
  bench::ScaleConfig s;
  s.widths = c.get_uint_list("scale.widths");
  s.seeds = c.get_uint("scale.seeds");
  return s;
}

inline InferenceConfig inference_config(const Config& c) {
  InferenceConfig m;
  m.dims.d_model = c.get_uint("model.d_model");
  m.dims.d_ff = c.get_uint("model.d_ff");
  m.dims.vocab = c.get_uint("model.vocab");
  m.dims.max_len = std::max<std::size_t>(c.get_uint("model.tokens"), 1);
  m.scale_bits = static_cast<unsigned>(c.get_uint("model.scale_bits"));
  m.taylor = transcend_config(c);
  m.ring = ring_config(c);
  m.seed = c.get_uint("seed");
  m.threads = static_cast<unsigned>(std::max<std::uint64_t>(c.get_uint("threads"), 1));
  return m;
}

inline bench::RingCostConfig ringcost_config(const Config& c) {
  bench::RingCostConfig r;
  r.steps = c.get_uint("ringcost.steps");
  r.model = inference_config(c);
  const std::size_t n = c.get_uint("model.tokens");
  if (n == 0) throw ConfigError("model.tokens must be >= 1");
  r.tokens.clear();
  for (std::size_t i = 0; i < n; ++i) r.tokens.push_back((i * 5 + 1) % r.model.dims.vocab);
  return r;
}

inline bench::AssociativityConfig associativity_config(const Config& c) {
  return {c.get_uint("associativity.n"), c.get_uint("associativity.trials")};
}

inline bench::DmrConfig dmr_config(const Config& c) {
  bench::DmrConfig d;
  d.operand_bits = c.get_uint("dmr.operand_bits");
  d.single_bit_positions = 2 * d.operand_bits;
  d.bursts = c.get_uint("dmr.bursts");
  return d;
}

inline bench::PipelineConfig pipeline_config(const Config& c) {
  bench::PipelineConfig p;
  p.steps = c.get_uint("pipeline.steps");
  p.dim = c.get_uint("pipeline.dim");
  p.scale_bits = static_cast<unsigned>(c.get_uint("model.scale_bits"));
  p.eiu = eiu_config(c);
  return p;
}

}  // namespace halo::cli
