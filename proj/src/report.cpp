#include "fimsel/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fimsel/errors.hpp"

namespace fimsel {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header)
    : header_(std::move(header)) {
  if (header_.empty()) throw UsageError("csv needs at least one column");
}

void CsvWriter::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size())
    throw UsageError("csv row width does not match the header");
  for (const auto& c : cells)
    if (c.find_first_of(",\"\n\r") != std::string::npos)
      throw UsageError("csv cell contains a delimiter: " + c);
  rows_.push_back(std::move(cells));
}

std::string CsvWriter::text() const {
  std::string out;
  auto append = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  append(header_);
  for (const auto& row : rows_) append(row);
  return out;
}

void CsvWriter::write(const std::string& path) const {
  write_text_file(path, text());
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["config_hash"] = manifest.config_hash;
  j["seed"] = manifest.seed;
  j["version"] = manifest.version;
  j["wall_seconds"] = manifest.wall_seconds;
  nlohmann::json phases = nlohmann::json::array();
  for (const auto& p : manifest.phases)
    phases.push_back({{"name", p.name}, {"seconds", p.seconds}});
  j["phases"] = phases;
  write_text_file(path, j.dump(2) + "\n");
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path))
    throw ConfigError("cannot create output directory: " + path);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << text;
  if (!out) throw ConfigError("write failed: " + path);
}

}  // namespace fimsel
