#pragma once
// Minimal CSV helpers. Fields never need quoting: identifiers are
// alphanumeric plus underscore, numbers use the shortest round-trip form.

#include <iosfwd>
#include <string>
#include <vector>

namespace stasmc::csv {

std::string num(double v);
std::vector<std::string> split(const std::string& line);
// Reads all rows; the first row is returned as header. Blank lines skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  // -1 if absent
};
Table read(std::istream& is);
Table read_file(const std::string& path);
// Writes content to path via a temporary file and rename, so readers never
// see a partial file.
void write_file(const std::string& path, const std::string& content);

}  // namespace stasmc::csv
