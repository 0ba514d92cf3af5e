#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>

#include "vanet/core_model.hpp"

namespace vanet {

/// Shortest round-trippable-enough text for CSV cells ("%.12g"). Using one
/// fixed format everywhere keeps reruns byte-identical.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Minimal CSV writer: cells are written verbatim, no quoting (the library
/// never emits commas or quotes inside a cell).
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto n : names) {
      if (!first) out_ << ',';
      out_ << n;
      first = false;
    }
    out_ << '\n';
    return *this;
  }

  CsvWriter& cell(std::string_view s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double x) { return cell(format_double(x)); }
  CsvWriter& cell(long long x) { return cell(std::to_string(x)); }
  CsvWriter& cell(std::size_t x) { return cell(std::to_string(x)); }
  CsvWriter& cell(int x) { return cell(std::to_string(x)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ostream& out_;
  bool first_ = true;
};

/// Opens `path` for writing in binary mode; throws Error when unwritable.
inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  return out;
}

}  // namespace vanet
