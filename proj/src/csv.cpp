#include "wflow/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "wflow/errors.hpp"

namespace wflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_rows(std::ostream& out, const std::string& header,
                const std::vector<std::vector<double>>& rows) {
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_double(row[i]);
    }
    out << '\n';
  }
}

std::vector<std::vector<double>> read_rows(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw Error(ErrorKind::domain, "csv: expected header '" + header + "'");
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      const std::string cell = trim(line.substr(pos, next - pos));
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw Error(ErrorKind::domain, "csv line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      row.push_back(v);
      pos = next + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace wflow
