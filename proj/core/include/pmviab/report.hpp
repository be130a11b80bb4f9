#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pmv {

/// Provenance stamp embedded in every artifact.
struct Provenance {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string version = "0.1.0";

  std::string comment_line() const;  // "# pmviab v... config=... seeds=..."
};

/// FNV-1a 64-bit hash, hex-encoded; used as the config fingerprint.
std::string fnv1a_hex(const std::string& text);

/// Fixed "%.17g" formatting so reruns are byte-identical.
std::string format_double(double v);

/// Deterministic CSV writer: provenance comment, header, then rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Provenance& prov,
            const std::vector<std::string>& columns);
  ~CsvWriter();

  void row(const std::vector<std::string>& cells);
  void row_numeric(const std::vector<double>& cells);

 private:
  std::string buffer_;
  std::filesystem::path path_;
};

/// Writes pretty-printed JSON text (already serialized) plus final newline.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pmv
