#pragma once

#include <string>
#include <vector>

namespace haarpr {

// 17 significant digits so written values round-trip exactly.
std::string format_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  void write(const std::string& path) const;
  std::string to_string() const;
};

// One-column CSV with header "y".
std::vector<double> load_y_csv(const std::string& path);
void write_y_csv(const std::string& path, const std::vector<double>& y);

}  // namespace haarpr
