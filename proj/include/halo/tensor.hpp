#pragma once

// Dense row-major matrices of exact rationals.

#include "halo/convert.hpp"
#include "halo/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace halo {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RationalTensor {
 public:
  RationalTensor() = default;
  RationalTensor(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
    refresh_bits();
  }
  RationalTensor(std::size_t rows, std::size_t cols, std::vector<Rational> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw DimensionError("RationalTensor: data length != rows*cols");
    refresh_bits();
  }

  static RationalTensor identity(std::size_t n) {
    RationalTensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = Rational(1);
    t.refresh_bits();
    return t;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  const std::vector<Rational>& data() const { return data_; }

  const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  /// Cached max total_bits over entries.
  std::size_t max_bits() const { return max_bits_; }

  /// BitReport of the widest entry (by total_bits).
  BitReport widest() const {
    BitReport best;
    for (const auto& q : data_) {
      const BitReport b = q.bits();
      if (b.total_bits > best.total_bits) best = b;
    }
    return best;
  }

  /// Widest integer register over all entries: max over entries of max(num, den) bits.
  std::size_t register_bits() const {
    std::size_t m = 0;
    for (const auto& q : data_) m = std::max(m, q.bits().register_bits());
    return m;
  }

  RationalTensor row(std::size_t r) const {
    return RationalTensor(1, cols_, std::vector<Rational>(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                                                          data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)));
  }

  RationalTensor transpose() const {
    std::vector<Rational> out(data_.size());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out[c * rows_ + r] = data_[r * cols_ + c];
    return RationalTensor(cols_, rows_, std::move(out));
  }

  RationalTensor map(const std::function<Rational(const Rational&)>& f) const {
    std::vector<Rational> out;
    out.reserve(data_.size());
    for (const auto& q : data_) out.push_back(f(q));
    return RationalTensor(rows_, cols_, std::move(out));
  }

  /// Value equality entrywise.
  friend bool operator==(const RationalTensor& a, const RationalTensor& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  /// Same num/den pairs in every entry.
  bool identical(const RationalTensor& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) return false;
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (!data_[i].identical(o.data_[i])) return false;
    return true;
  }

  std::vector<double> to_floats() const {
    std::vector<double> out;
    out.reserve(data_.size());
    for (const auto& q : data_) out.push_back(to_float(q));
    return out;
  }

 private:
  void refresh_bits() {
    max_bits_ = 0;
    for (const auto& q : data_) max_bits_ = std::max(max_bits_, q.bits().total_bits);
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Rational> data_;
  std::size_t max_bits_ = 0;
};

namespace detail {
/// Runs body(row) for every row, split over `threads` workers. Exact
/// arithmetic makes the result independent of the split.
inline void for_rows(std::size_t rows, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || rows < 2) {
    for (std::size_t r = 0; r < rows; ++r) body(r);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, rows);
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t r = w; r < rows; r += workers) body(r);
    });
  }
}
}  // namespace detail

/// Exact product, no simplification.
inline RationalTensor rational_matmul(const RationalTensor& a, const RationalTensor& b, unsigned threads = 1) {
  if (a.cols() != b.rows()) {
    throw DimensionError("rational_matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<Rational> out(n * m);
  detail::for_rows(n, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < m; ++j) {
      Rational acc;
      for (std::size_t t = 0; t < k; ++t) acc = rat_add(acc, rat_mul(a(i, t), b(t, j)));
      out[i * m + j] = std::move(acc);
    }
  });
  return RationalTensor(n, m, std::move(out));
}

inline RationalTensor rational_add(const RationalTensor& a, const RationalTensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("rational_add: shape mismatch");
  std::vector<Rational> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(rat_add(a.data()[i], b.data()[i]));
  return RationalTensor(a.rows(), a.cols(), std::move(out));
}

inline RationalTensor simplify(const RationalTensor& t) {
  return t.map([](const Rational& q) { return simplify(q); });
}

// Snapshot text format: "shape rows cols" then one "row col num den" line per entry.

inline void write_tensor(std::ostream& os, const RationalTensor& t) {
  os << "shape " << t.rows() << ' ' << t.cols() << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c)
      os << r << ' ' << c << ' ' << t(r, c).num().to_string() << ' ' << t(r, c).den().to_string() << '\n';
}

inline RationalTensor read_tensor(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw std::runtime_error("tensor snapshot line " + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(is, line)) fail("missing shape header");
  ++line_no;
  std::istringstream header(line);
  std::string tag;
  std::size_t rows = 0, cols = 0;
  if (!(header >> tag >> rows >> cols) || tag != "shape") fail("expected 'shape rows cols'");

  std::vector<Rational> data(rows * cols);
  std::vector<bool> seen(rows * cols, false);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream in(line);
    std::size_t r = 0, c = 0;
    std::string num, den, extra;
    if (!(in >> r >> c >> num >> den) || (in >> extra)) fail("expected 'row col num den'");
    if (r >= rows || c >= cols) fail("index out of range");
    if (seen[r * cols + c]) fail("duplicate entry");
    seen[r * cols + c] = true;
    try {
      data[r * cols + c] = Rational(BigInt::from_string(num), BigInt::from_string(den));
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) fail("missing entries");
  return RationalTensor(rows, cols, std::move(data));
}

}  // namespace halo
