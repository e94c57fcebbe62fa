#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wflow {

// Shortest round-trip decimal representation; locale independent.
std::string format_double(double v);

// Writes `header` and one comma-separated row per entry of `rows`.
void write_rows(std::ostream& out, const std::string& header,
                const std::vector<std::vector<double>>& rows);

// Reads a numeric CSV whose first line must equal `header` (after trimming).
std::vector<std::vector<double>> read_rows(std::istream& in, const std::string& header);

}  // namespace wflow
