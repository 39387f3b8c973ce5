#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mflq {

using CsvCell = std::variant<double, std::int64_t, std::string>;

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<CsvCell>> rows;
};

/// 17 significant digits, general notation.
std::string format_double(double v);
std::string render_csv(const CsvTable& table);
/// Throws IoError; rows must match the header width.
void emit_csv(const CsvTable& table, const std::string& path);

}  // namespace mflq
