#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fedhpn/common.hpp"

namespace fedhpn {

// Minimal CSV writer: comma-separated, UTF-8, quotes only when a cell needs
// it. Doubles go through fmt_double (17 significant digits).
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw MissingArtifactError("cannot open for write: " + path.string());
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(cells[i]);
    }
    out_ << '\n';
  }

  static std::string quote(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string q = "\"";
    for (char c : cell) {
      if (c == '"') q += '"';
      q += c;
    }
    q += '"';
    return q;
  }

 private:
  std::ofstream out_;
};

// Parses a CSV file into rows of cells; handles quoted cells with doubled
// quotes. Throws ConfigError with 1-based line numbers on malformed input.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace fedhpn
