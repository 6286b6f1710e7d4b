#pragma once

// Minimal RFC 4180 reader/writer helpers shared by the file formats.

#include <cmath>
#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hgeo/error.hpp"

namespace hgeo::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index of `name`, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require_column(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw Error(ErrorCode::ParseError, "missing column '" + std::string(name) + "'");
  }
};

namespace detail {

inline void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

// Splits one logical record; quoted fields may span lines, so more input is
// pulled from `in` as needed.
inline bool read_record(std::istream& in, std::size_t& line_no, std::vector<std::string>& out) {
  out.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++line_no;
  strip_cr(line);

  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  for (;;) {
    if (i == line.size()) {
      if (quoted) {
        std::string next;
        if (!std::getline(in, next)) {
          throw Error(ErrorCode::ParseError,
                      "unterminated quoted field at line " + std::to_string(line_no));
        }
        ++line_no;
        strip_cr(next);
        field.push_back('\n');
        line = std::move(next);
        i = 0;
        continue;
      }
      out.push_back(std::move(field));
      return true;
    }
    char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
}

inline bool blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && fields[0].find_first_not_of(" \t") == std::string::npos;
}

}  // namespace detail

inline std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

/// Reads a header line plus records. Blank lines are skipped. A leading UTF-8
/// byte-order mark is tolerated.
inline Table read(std::istream& in) {
  Table table;
  std::size_t line_no = 0;
  std::vector<std::string> fields;
  if (!detail::read_record(in, line_no, fields)) {
    throw Error(ErrorCode::ParseError, "empty input, expected a header line");
  }
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  for (auto& f : fields) table.header.emplace_back(trim(f));

  for (;;) {
    std::size_t start = line_no + 1;
    if (!detail::read_record(in, line_no, fields)) break;
    if (detail::blank(fields)) continue;
    table.rows.push_back(Row{start, fields});
  }
  return table;
}

/// Strict decimal parse ('.' separator); accepts "inf"/"nan" spellings.
inline std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

/// Nine significant digits; non-finite values spelled inf / -inf / nan.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Quotes a field only when it contains a separator, quote or newline.
inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace hgeo::csv
