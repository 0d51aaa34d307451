#include "csslab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace csslab {

namespace {
void (*g_sink)(const std::string&) = nullptr;
}

void warn(const std::string& msg) {
  if (g_sink)
    g_sink(msg);
  else
    std::cerr << "warning: " << msg << '\n';
}

void set_warning_sink(void (*sink)(const std::string&)) { g_sink = sink; }

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void CsvTable::add(const std::string& name, std::vector<double> col) {
  require(columns.empty() || col.size() == rows(), "CSV column length mismatch for " + name);
  header.push_back(name);
  columns.push_back(std::move(col));
}

void CsvTable::add(const std::string& name, const RVec& col) {
  add(name, std::vector<double>(col.data(), col.data() + col.size()));
}

void write_csv(const std::filesystem::path& path, const CsvTable& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << t.header[c];
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << fmt17(t.columns[c][r]);
    os << '\n';
  }
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty CSV file " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  t.columns.assign(t.header.size(), {});
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      require(c < t.columns.size(), "CSV row has too many cells in " + path.string());
      try {
        t.columns[c++].push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("non-numeric CSV cell '" + cell + "' in " + path.string());
      }
    }
    require(c == t.columns.size(), "CSV row has too few cells in " + path.string());
  }
  return t;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot read " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (is.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

TimeSeries read_series(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  require(t.columns.size() >= 2, "series CSV needs columns t, value");
  TimeSeries s{t.columns[0], t.columns[1]};
  validate_series(s);
  return s;
}

RadialField read_field(const std::filesystem::path& path, GridPtr g) {
  const CsvTable t = read_csv(path);
  require(t.columns.size() >= 3, "field CSV needs columns r, re, im");
  const auto& r = t.columns[0];
  require(r.size() >= 2, "field CSV needs at least two rows");
  for (std::size_t i = 1; i < r.size(); ++i) require(r[i] > r[i - 1], "field radii must increase");
  CVec v = CVec::Zero(g->size());
  // Piecewise-linear interpolation of the tabulated field.
  for (int i = 0; i < g->size(); ++i) {
    const double x = g->r()(i);
    if (x < r.front() || x > r.back()) continue;
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - r.begin(), 1), r.size() - 1);
    const double a = (x - r[k - 1]) / (r[k] - r[k - 1]);
    const cplx lo(t.columns[1][k - 1], t.columns[2][k - 1]), hi(t.columns[1][k], t.columns[2][k]);
    v(i) = (1.0 - a) * lo + a * hi;
  }
  return make_field(g, v);
}

}  // namespace csslab
