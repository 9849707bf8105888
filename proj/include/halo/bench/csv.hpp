#pragma once

// Minimal CSV tables: header row, 17-significant-digit floats, rationals as
// num/den.

#include "halo/rational.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace halo::bench {

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_rational(const Rational& q) { return q.to_string(); }

/// Cells are stored pre-formatted so output is byte-stable.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw std::out_of_range("Table: no column " + name);
  }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw std::invalid_argument("Table: row width != header width");
    rows_.push_back(std::move(cells));
  }

  void write(std::ostream& os) const {
    write_line(os, columns_);
    for (const auto& r : rows_) write_line(os, r);
  }

 private:
  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        os << cells[i];
        continue;
      }
      os << '"';
      for (char c : cells[i]) {
        if (c == '"') os << '"';
        os << c;
      }
      os << '"';
    }
    os << '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_csv(const std::filesystem::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  t.write(out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace halo::bench
