#include "plate/ctc.hpp"

#include <cstdio>
#include <sstream>

namespace plate::ctc {

std::string logits_to_csv(const Matrix<double>& logits) {
  std::string out;
  char buf[64];
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", logits(t, k));
      if (k) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

Matrix<double> logits_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("logits csv line " + std::to_string(lineno) +
                         ": bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("logits csv line " + std::to_string(lineno) +
                       ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("logits csv: no rows");
  Matrix<double> out(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t k = 0; k < rows[t].size(); ++k)
      out(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = rows[t][k];
  return out;
}

}  // namespace plate::ctc
