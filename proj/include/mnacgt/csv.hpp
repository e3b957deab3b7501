#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mnacgt {

// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

class CsvRow {
 public:
  CsvRow& add(double v) { return push(format_double(v)); }
  CsvRow& add(std::uint64_t v) { return push(std::to_string(v)); }
  CsvRow& add(std::int64_t v) { return push(std::to_string(v)); }
  CsvRow& add(int v) { return push(std::to_string(v)); }
  CsvRow& add(bool v) { return push(v ? "true" : "false"); }
  CsvRow& add(std::string_view v) { return push(quote(v)); }
  CsvRow& add(const char* v) { return add(std::string_view(v)); }
  CsvRow& add(const std::string& v) { return add(std::string_view(v)); }

  std::string str() const { return line_; }

 private:
  CsvRow& push(const std::string& cell) {
    if (!first_) line_ += ',';
    line_ += cell;
    first_ = false;
    return *this;
  }
  static std::string quote(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
    std::string out = "\"";
    for (char c : v) {
      if (c == '"') out += '"';
      out += c == '\n' ? ' ' : c;
    }
    return out + '"';
  }

  std::string line_;
  bool first_ = true;
};

inline std::string join_header(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  return out;
}

// Minimal reader for the CSVs this project writes: skips '#' lines, splits on
// commas, honours double quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return header.size();
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      t.header = split_csv_line(line);
      have_header = true;
    } else {
      t.rows.push_back(split_csv_line(line));
    }
  }
  return t;
}

}  // namespace mnacgt
