#include <algorithm>
#include <cmath>

#include "aag/csv.hpp"
#include "aag/error.hpp"
#include "aag/oracle.hpp"

namespace aag {

std::size_t MemoryTable::column_index(const std::string& column) const {
  auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw Error(ErrorCode::MissingColumn, "no column '" + column + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

MemoryDataset load_dataset(const Ring& ring, const std::filesystem::path& csv_dir) {
  MemoryDataset ds;
  for (const auto& t : ring.tables) {
    auto path = csv_dir / (t.name + ".csv");
    auto csv = load_csv(path);
    std::vector<std::string> expected;
    for (const auto& c : t.columns) expected.push_back(c.name);
    if (csv.header != expected) {
      std::string want;
      for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
      throw Error(ErrorCode::MissingColumn, "header must be exactly " + want, path.string());
    }
    MemoryTable mt;
    mt.columns = expected;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      std::vector<Value> row;
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        row.push_back(parse_cell(csv.rows[r][i], t.columns[i].type, path.filename().string() + ":" + std::to_string(r + 2)));
      }
      mt.rows.push_back(std::move(row));
    }
    ds.tables[t.name] = std::move(mt);
  }
  return ds;
}

ResultSet canonicalize(ResultSet rs) {
  std::stable_sort(rs.rows.begin(), rs.rows.end(), [](const auto& a, const auto& b) {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
      int c = compare_values(a[i], b[i]);
      if (c) return c < 0;
    }
    return a.size() < b.size();
  });
  return rs;
}

namespace {

bool value_match(const Value& a, const Value& b, double tol) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<double>(&a)) {
    double y = std::get<double>(b);
    if (*x == y) return true;
    return std::abs(*x - y) <= tol * std::max(std::abs(*x), std::abs(y));
  }
  return a == b;
}

}  // namespace

bool results_match(const ResultSet& a, const ResultSet& b, bool ordered, double tolerance, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (a.columns.size() != b.columns.size()) {
    return fail("column count " + std::to_string(a.columns.size()) + " vs " + std::to_string(b.columns.size()));
  }
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    if (a.columns[i].name != b.columns[i].name) return fail("column " + std::to_string(i) + " name differs");
  }
  if (a.rows.size() != b.rows.size()) {
    return fail("row count " + std::to_string(a.rows.size()) + " vs " + std::to_string(b.rows.size()));
  }
  ResultSet cx, cy;
  const ResultSet* px = &a;
  const ResultSet* py = &b;
  if (!ordered) {
    cx = canonicalize(a);
    cy = canonicalize(b);
    px = &cx;
    py = &cy;
  }
  for (std::size_t r = 0; r < px->rows.size(); ++r) {
    for (std::size_t c = 0; c < px->columns.size(); ++c) {
      if (!value_match(px->rows[r][c], py->rows[r][c], tolerance)) {
        return fail("row " + std::to_string(r) + " column '" + px->columns[c].name + "': " +
                    debug_string(px->rows[r][c]) + " vs " + debug_string(py->rows[r][c]));
      }
    }
  }
  return true;
}

}  // namespace aag
