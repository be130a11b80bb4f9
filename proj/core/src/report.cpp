#include "pmviab/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pmv {

std::string Provenance::comment_line() const {
  std::string line = "# pmviab v" + version + " config=" + config_hash + " seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) line += ",";
    line += std::to_string(seeds[i]);
  }
  return line;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const Provenance& prov,
                     const std::vector<std::string>& columns)
    : path_(path) {
  buffer_ = prov.comment_line() + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) buffer_ += ",";
    buffer_ += columns[i];
  }
  buffer_ += "\n";
}

CsvWriter::~CsvWriter() {
  try {
    write_text_file(path_, buffer_);
  } catch (...) {
    // destructor must not throw; callers that care flush via scope exit
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buffer_ += ",";
    buffer_ += cells[i];
  }
  buffer_ += "\n";
}

void CsvWriter::row_numeric(const std::vector<double>& cells) {
  std::vector<std::string> text;
  text.reserve(cells.size());
  for (double v : cells) text.push_back(format_double(v));
  row(text);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace pmv
