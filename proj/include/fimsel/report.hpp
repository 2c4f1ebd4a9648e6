#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fimsel {

inline constexpr const char* kLibraryVersion = "0.1.0";

// 17 significant digits: enough for double round trips, so rereading a CSV
// reproduces the value bit for bit.
std::string format_double(double v);

// Tiny CSV emitter. All of our schemas use plain tokens and numbers, so no
// quoting is implemented; a comma, quote, or newline in a cell is a bug and
// throws. Output is UTF-8 with LF line endings, header always present.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::string text() const;
  void write(const std::string& path) const;
  std::size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct PhaseTiming {
  std::string name;
  double seconds = 0.0;
};

// Run record written next to every output set. Hash and seed identify the
// inputs; reruns with the same pair reproduce the data files bitwise (the
// manifest itself carries timings, which naturally vary).
struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version = kLibraryVersion;
  double wall_seconds = 0.0;
  std::vector<PhaseTiming> phases;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

// Creates the directory (and parents) if needed; throws ConfigError when the
// path exists but is not a directory.
void ensure_directory(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace fimsel
