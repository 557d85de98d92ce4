#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace pdmmlab {

// Shortest round-trip decimal form of v (std::to_chars).
std::string format_double(double v);

// Comma-separated output with '#'-prefixed metadata comment lines. Numeric
// formatting is locale-independent and byte-stable.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void comment(std::string_view text);

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    (write_cell(cells, first), ...);
    out_ << '\n';
  }

 private:
  void write_cell(double v, bool& first);
  void write_cell(int v, bool& first);
  void write_cell(long v, bool& first);
  void write_cell(unsigned long v, bool& first);
  void write_cell(unsigned long long v, bool& first);
  void write_cell(std::string_view v, bool& first);
  void write_cell(const char* v, bool& first) { write_cell(std::string_view(v), first); }
  void write_cell(const std::string& v, bool& first) { write_cell(std::string_view(v), first); }
  void sep(bool& first);

  std::ofstream out_;
};

}  // namespace pdmmlab
