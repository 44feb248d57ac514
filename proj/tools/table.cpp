#include "table.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "ftheat/error.hpp"

namespace ftheat::cli {

Format parse_format(const std::string& name) {
  if (name == "text") return Format::Text;
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw DomainError("unknown format '" + name + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string text_of(const Cell& c) {
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "yes" : "no";
        } else {
          if (!std::isfinite(v)) return format_double(v);
          char buf[64];
          std::snprintf(buf, sizeof buf, "%.*f%s", c.digits, c.percent ? 100.0 * v : v,
                        c.percent ? "%" : "");
          std::string s(buf);
          // Avoid printing a negative zero after rounding.
          if (s.rfind("-", 0) == 0 && s.find_first_not_of("-0.%") == std::string::npos)
            s.erase(0, 1);
          return s;
        }
      },
      c.value);
}

std::string csv_of(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) {
            if (ch == '"') q += '"';
            q += ch;
          }
          return q + "\"";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return format_double(v);
        }
      },
      c.value);
}

nlohmann::ordered_json json_of(const Cell& c) {
  return std::visit(
      [](const auto& v) -> nlohmann::ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          if (!std::isfinite(v)) return nullptr;
          return v;
        } else {
          return v;
        }
      },
      c.value);
}

nlohmann::ordered_json table_json(const Table& t) {
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < t.columns.size(); ++k)
      obj[t.columns[k]] = k < r.size() ? json_of(r[k]) : nullptr;
    rows.push_back(std::move(obj));
  }
  return rows;
}

void render_text(std::ostream& out, const Table& t) {
  std::vector<std::size_t> width(t.columns.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t k = 0; k < t.columns.size(); ++k) width[k] = t.columns[k].size();
  for (const auto& r : t.rows) {
    std::vector<std::string> line;
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
      line.push_back(k < r.size() ? text_of(r[k]) : "");
      width[k] = std::max(width[k], line.back().size());
    }
    cells.push_back(std::move(line));
  }
  if (!t.title.empty()) out << t.title << '\n';
  auto emit = [&](const std::vector<std::string>& line) {
    std::string s;
    for (std::size_t k = 0; k < line.size(); ++k) {
      const std::string pad(width[k] - line[k].size(), ' ');
      // First column left-aligned, the rest right-aligned.
      s += k == 0 ? line[k] + pad : "  " + pad + line[k];
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out << s << '\n';
  };
  emit(t.columns);
  for (const auto& line : cells) emit(line);
  for (const auto& n : t.notes) out << n << '\n';
}

void render_csv(std::ostream& out, const Table& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) out << (k ? "," : "") << t.columns[k];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < t.columns.size(); ++k)
      out << (k ? "," : "") << (k < r.size() ? csv_of(r[k]) : "");
    out << '\n';
  }
}

}  // namespace

void render(std::ostream& out, const Table& table, Format format) {
  switch (format) {
    case Format::Text: render_text(out, table); break;
    case Format::Csv: render_csv(out, table); break;
    case Format::Json: out << table_json(table).dump(2) << '\n'; break;
  }
}

void render(std::ostream& out, const std::vector<Table>& tables, Format format) {
  if (format == Format::Json) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const auto& t : tables) doc[t.title] = table_json(t);
    out << doc.dump(2) << '\n';
    return;
  }
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) out << '\n';
    render(out, tables[i], format);
  }
}

}  // namespace ftheat::cli
