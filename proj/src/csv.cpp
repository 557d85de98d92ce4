#include "pdmmlab/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace pdmmlab {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary);  // binary: no platform newline translation
  if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
}

void CsvWriter::comment(std::string_view text) { out_ << "# " << text << '\n'; }

void CsvWriter::sep(bool& first) {
  if (!first) out_ << ',';
  first = false;
}

void CsvWriter::write_cell(double v, bool& first) {
  sep(first);
  out_ << format_double(v);
}
void CsvWriter::write_cell(int v, bool& first) {
  sep(first);
  out_ << v;
}
void CsvWriter::write_cell(long v, bool& first) {
  sep(first);
  out_ << v;
}
void CsvWriter::write_cell(unsigned long v, bool& first) {
  sep(first);
  out_ << v;
}
void CsvWriter::write_cell(unsigned long long v, bool& first) {
  sep(first);
  out_ << v;
}
void CsvWriter::write_cell(std::string_view v, bool& first) {
  sep(first);
  out_ << v;
}

}  // namespace pdmmlab
