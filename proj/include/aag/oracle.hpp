#pragma once

// Brute-force reference evaluator for SQR plans over in-memory tables.
// Shares policy constants with the compiler and nothing else.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aag/plan.hpp"
#include "aag/ring.hpp"
#include "aag/value.hpp"

namespace aag {

struct MemoryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::size_t column_index(const std::string& column) const;  // throws MissingColumn
};

struct MemoryDataset {
  std::map<std::string, MemoryTable> tables;
};

// Reads <csv_dir>/<table>.csv for every ring table; headers must match the
// ring's column list exactly.
MemoryDataset load_dataset(const Ring& ring, const std::filesystem::path& csv_dir);

ResultSet oracle_eval(const Ring& ring, const MemoryDataset& data, const SqrPlan& plan);

// Sorts rows by all columns (the order used when a plan has no sort).
ResultSet canonicalize(ResultSet rs);

// Equality with exact text/bool/integer comparison and relative tolerance for
// floats. Unordered results are canonicalized first. `why` receives the first
// difference.
bool results_match(const ResultSet& a, const ResultSet& b, bool ordered, double tolerance = 1e-9,
                   std::string* why = nullptr);

}  // namespace aag
