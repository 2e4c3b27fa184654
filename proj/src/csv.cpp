#include "haarpr/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "haarpr/errors.hpp"
#include "haarpr/parallel.hpp"

namespace haarpr {

namespace {
int g_max_threads = 0;
}

void set_max_threads(int n) { g_max_threads = n; }

int max_threads() {
  if (g_max_threads > 0) return g_max_threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string CsvTable::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i)
    os << header[i] << (i + 1 < header.size() ? "," : "");
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << format_double(row[i]) << (i + 1 < row.size() ? "," : "");
    os << "\n";
  }
  return os.str();
}

void CsvTable::write(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw param_error("cannot open for writing: " + path);
  f << to_string();
}

std::vector<double> load_y_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw param_error("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line)) throw param_error("empty CSV: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "y") throw param_error("expected header \"y\" in " + path);
  std::vector<double> out;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v = 0.0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc())
      throw param_error("bad number in " + path + ": " + line);
    out.push_back(v);
  }
  if (out.empty()) throw param_error("no samples in " + path);
  return out;
}

void write_y_csv(const std::string& path, const std::vector<double>& y) {
  std::ofstream f(path);
  if (!f) throw param_error("cannot open for writing: " + path);
  f << "y\n";
  for (double v : y) f << format_double(v) << "\n";
}

}  // namespace haarpr
