#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ftheat::cli {

enum class Format { Text, Csv, Json };

Format parse_format(const std::string& name);

/// A typed cell. Doubles carry their text-mode rendering: `digits` after the
/// point, scaled by 100 with a trailing % when `percent` is set. CSV and JSON
/// always print the full-precision value.
struct Cell {
  std::variant<std::monostate, std::string, std::int64_t, double, bool> value;
  int digits = 4;
  bool percent = false;

  Cell() = default;
  Cell(std::string s) : value(std::move(s)) {}
  Cell(const char* s) : value(std::string(s)) {}
  Cell(std::int64_t v) : value(v) {}
  Cell(int v) : value(static_cast<std::int64_t>(v)) {}
  Cell(std::size_t v) : value(static_cast<std::int64_t>(v)) {}
  Cell(bool v) : value(v) {}
  Cell(double v, int d = 4, bool pct = false) : value(v), digits(d), percent(pct) {}

  static Cell pct(double v, int d = 1) { return Cell(v, d, true); }
  static Cell maybe(const std::optional<double>& v, int d = 4, bool pct = false) {
    return v ? Cell(*v, d, pct) : Cell();
  }
  static Cell maybe(const std::optional<std::int64_t>& v) { return v ? Cell(*v) : Cell(); }
};

struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  // printed under text tables only

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

/// Shortest round-trip decimal form.
std::string format_double(double v);

void render(std::ostream& out, const Table& table, Format format);
/// Several tables: text prints them in sequence, CSV separates them with a
/// blank line, JSON emits an object keyed by title.
void render(std::ostream& out, const std::vector<Table>& tables, Format format);

}  // namespace ftheat::cli
