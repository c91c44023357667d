#include "pbc/signals.hpp"

#include <istream>
#include <sstream>

#include "json.hpp"

namespace pbc::sig {

Signal from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("from_csv: empty input");
  int dim = 0;
  for (char c : line)
    if (c == ',') ++dim;
  if (dim < 1) throw std::invalid_argument("from_csv: bad header '" + line + "'");
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        first = false;  // t column
        continue;
      }
      row.push_back(parse_double(cell));
    }
    if (static_cast<int>(row.size()) != dim) {
      throw std::invalid_argument("from_csv: row width mismatch");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("from_csv: no data rows");
  Signal s(dim, static_cast<int>(rows.size()));
  for (int t = 0; t < s.steps(); ++t)
    for (int i = 0; i < dim; ++i) s(t, i) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
  return s;
}

std::string to_json(const Signal& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (int t = 0; t < s.steps(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int i = 0; i < s.dim(); ++i) row.push_back(s(t, i));
    arr.push_back(std::move(row));
  }
  return arr.dump();
}

Signal from_json(const std::string& text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  if (!arr.is_array() || arr.empty() || !arr[0].is_array() || arr[0].empty()) {
    throw std::invalid_argument("from_json: expected non-empty array of arrays");
  }
  const int steps = static_cast<int>(arr.size());
  const int dim = static_cast<int>(arr[0].size());
  Signal s(dim, steps);
  for (int t = 0; t < steps; ++t) {
    if (static_cast<int>(arr[static_cast<std::size_t>(t)].size()) != dim) {
      throw std::invalid_argument("from_json: row width mismatch");
    }
    for (int i = 0; i < dim; ++i) s(t, i) = arr[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)].get<double>();
  }
  return s;
}

}  // namespace pbc::sig
