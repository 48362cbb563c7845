#pragma once

// CSV tables: one header row, LF endings, shortest round-trip doubles
// (std::to_chars, so the C locale never leaks in).

#include <charconv>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "roughsheet/errors.hpp"

namespace roughsheet {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw FormatError("format_double failed");
  return std::string(buf, end);
}

class Table {
 public:
  using Cell = std::variant<double, long long, std::string>;

  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw FormatError("table row has the wrong number of columns");
    rows_.push_back(std::move(row));
  }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }

  void write(std::ostream& os) const {
    write_line(os, header_);
    std::vector<std::string> cells;
    for (const auto& r : rows_) {
      cells.clear();
      for (const auto& c : r) cells.push_back(cell_text(c));
      write_line(os, cells);
    }
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot write table " + path);
    write(os);
  }

 private:
  static std::string cell_text(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_double(*d);
    if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
    return std::get<std::string>(c);
  }

  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + '"';
  }

  static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << quote(cells[i]);
    }
    os << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

}  // namespace roughsheet
