#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ovk::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
};

/// Parses a comma-separated file with a header row. Lines starting with '#'
/// are comments and are skipped.
Table read(std::istream& is);
Table read(const std::string& path);

/// Round-trip decimal representation ("%.17g").
std::string format(double v);

void write_row(std::ostream& os, const std::vector<double>& values);
void write_header(std::ostream& os, const std::vector<std::string>& names);

}  // namespace ovk::csv
