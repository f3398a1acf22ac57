#pragma once
// Shared by the acceptance binary and the property tests: fills every plan
// template over every compatible key/metric pair and checks compiled SQL
// against the reference evaluator.
#include <filesystem>
#include <string>
#include <vector>

#include "aag/blueprints.hpp"
#include "aag/oracle.hpp"
#include "aag/sqlite_db.hpp"

namespace aag::testing {

std::filesystem::path source_dir();
std::filesystem::path wildfire_dir();

// Ring with derived attributes, pointed at `db` when given.
Ring wildfire_ring(const std::filesystem::path& db = {});

// One requirement per plan template with conventional slot bindings.
Blueprint coverage_blueprint(const Library& lib);

// Target key x metric x filter-variant requests over the wildfire ring.
std::vector<ReportRequest> coverage_requests(const Ring& ring);

struct CoverageCase {
  std::string name;  // "<template> key=<Entity.attr> metric=<attr> variant=<n>"
  SqrPlan plan;
};

std::vector<CoverageCase> coverage_cases(const Ring& ring, const Library& lib);

struct Comparison {
  bool ok = false;
  std::string detail;
  ResultSet compiled;
  ResultSet expected;
};

Comparison compare_with_oracle(const Ring& ring, const MemoryDataset& data, const Database& db, const SqrPlan& plan);

}  // namespace aag::testing
