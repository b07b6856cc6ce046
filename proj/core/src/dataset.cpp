#include "repu/dataset.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "fmt_double.hpp"
#include "repu/errors.hpp"

namespace repu {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos && line[0] != '#') header = split_csv(line);
  if (header.empty()) throw FormatError("dataset: missing header row");
  const bool has_y = header.back() == "y";
  const size_t dcols = header.size() - (has_y ? 1 : 0);
  if (dcols == 0) throw FormatError("dataset: no covariate columns");

  std::vector<double> vals;
  int rows = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw FormatError("dataset line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                        " columns");
    for (const auto& c : cells) {
      try {
        size_t used = 0;
        double v = std::stod(c, &used);
        if (used != c.size() || !std::isfinite(v)) throw std::invalid_argument(c);
        vals.push_back(v);
      } catch (const std::exception&) {
        throw FormatError("dataset line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
    }
    ++rows;
  }
  if (rows == 0) throw FormatError("dataset has no rows");
  Dataset d;
  d.X.resize(rows, static_cast<Eigen::Index>(dcols));
  if (has_y) d.y.resize(rows);
  size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    for (size_t c = 0; c < dcols; ++c) d.X(r, static_cast<Eigen::Index>(c)) = vals[i++];
    if (has_y) d.y(r) = vals[i++];
  }
  return d;
}

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (int j = 0; j < data.d(); ++j) out += (j ? ",x" : "x") + std::to_string(j + 1);
  if (data.labeled()) out += ",y";
  out += "\n";
  for (int r = 0; r < data.n(); ++r) {
    for (int j = 0; j < data.d(); ++j) out += (j ? "," : "") + format_double(data.X(r, j));
    if (data.labeled()) out += "," + format_double(data.y(r));
    out += "\n";
  }
  return out;
}

}  // namespace repu
