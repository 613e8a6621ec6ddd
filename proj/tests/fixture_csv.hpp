#pragma once

// Minimal reader for the CSV fixtures written by mpde_sim.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fixture {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string &name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw std::runtime_error("fixture: no column '" + name + "'");
  }
  [[nodiscard]] double number(std::size_t row, const std::string &name) const {
    return std::stod(rows.at(row).at(column(name)));
  }
  [[nodiscard]] const std::string &text(std::size_t row, const std::string &name) const {
    return rows.at(row).at(column(name));
  }
};

inline std::vector<std::string> split(const std::string &line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  for (std::string c; std::getline(in, c, ',');)
    cells.push_back(c);
  return cells;
}

inline Table read(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("fixture: cannot open " + path);
  Table t;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#')
      continue;
    if (t.header.empty())
      t.header = split(line);
    else
      t.rows.push_back(split(line));
  }
  return t;
}

inline std::string path(const std::string &name) {
  return std::string(MPDE_FIXTURE_DIR) + "/" + name;
}

} // namespace fixture
