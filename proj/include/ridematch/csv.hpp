#pragma once

// Minimal CSV support: comma separators, required header row, UTF-8, no
// quoting (ids and numbers only in all schemas used here).

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "ridematch/errors.hpp"

namespace ridematch {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline CsvTable parse_csv(std::istream& in, const std::string& what) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    fail(ErrorCode::ParseError, what + ": empty file, header row required");
  }
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    table.rows.push_back(split_csv_line(line));
  }
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  return parse_csv(in, path);
}

// Index of a header column; -1 when absent and not required.
inline int csv_column(const CsvTable& table, const std::string& name,
                      const std::string& what, bool required = true) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return static_cast<int>(i);
  }
  if (required) fail(ErrorCode::ParseError, what + ": missing column '" + name + "'");
  return -1;
}

inline double csv_double(const std::string& field, const std::string& what) {
  double value = 0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorCode::ParseError, what + ": bad number '" + field + "'");
  }
  return value;
}

inline long csv_long(const std::string& field, const std::string& what) {
  long value = 0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorCode::ParseError, what + ": bad integer '" + field + "'");
  }
  return value;
}

// Fixed-point formatting keeps output files byte-stable across platforms.
inline std::string format_double(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace ridematch
