#pragma once

// CSV emission with explicit float formatting so identical runs produce
// byte-identical files.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace arrol {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& header(const std::vector<std::string>& columns) {
    write_row(columns);
    return *this;
  }

  CsvWriter& cell(const std::string& v) {
    cells_.push_back(v);
    return *this;
  }
  CsvWriter& cell(const char* v) { return cell(std::string(v)); }
  CsvWriter& cell(double v) { return cell(format_double(v)); }
  CsvWriter& cell(std::int64_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(int v) { return cell(std::to_string(v)); }
  CsvWriter& cell(bool v) { return cell(std::string(v ? "true" : "false")); }

  void end_row() {
    write_row(cells_);
    cells_.clear();
  }

private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
  std::vector<std::string> cells_;
};

}  // namespace arrol
