#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace aag {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 subset: comma separated, double-quoted fields with "" escapes.
CsvTable parse_csv(const std::string& text, const std::string& origin);
CsvTable load_csv(const std::filesystem::path& path);

}  // namespace aag

#include "aag/value.hpp"

namespace aag {

// Converts a CSV cell per column storage type; the empty cell is NULL.
Value parse_cell(const std::string& cell, const std::string& storage_type, const std::string& origin);

}  // namespace aag
