#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "csslab/diagnostics.hpp"
#include "csslab/grid.hpp"

namespace csslab {

using json = nlohmann::json;

// Round-trip decimal with 17 significant digits.
std::string fmt17(double v);
// Finite numbers as-is, non-finite ones as null.
json num(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  void add(const std::string& name, std::vector<double> col);
  void add(const std::string& name, const RVec& col);
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

std::uint64_t file_checksum(const std::filesystem::path& path);

// Two-column (t, value) series.
TimeSeries read_series(const std::filesystem::path& path);
// Columns r, re, im, interpolated onto the grid (zero outside the table).
RadialField read_field(const std::filesystem::path& path, GridPtr g);

}  // namespace csslab
