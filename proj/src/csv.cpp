#include "fedhpn/csv.hpp"

namespace fedhpn {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cell += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cell += c;
        }
      } else if (c == '"') {
        if (!cell.empty())
          throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                            ": stray quote mid-cell");
        quoted = true;
      } else if (c == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    if (quoted)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": unterminated quoted cell");
    cells.push_back(std::move(cell));
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace fedhpn
