#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aag/compiler.hpp"
#include "aag/ring.hpp"
#include "aag/value.hpp"

struct sqlite3;

namespace aag {

// One SQLite connection. Not shareable across threads; open one per worker.
class Database {
 public:
  static Database open(const std::filesystem::path& path, bool read_only = true);
  static Database memory();

  Database(Database&& o) noexcept : db_(o.db_) { o.db_ = nullptr; }
  Database& operator=(Database&& o) noexcept;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  ~Database();

  void exec(const std::string& sql);
  // Columns typed Filter come back as booleans when `columns` is given.
  ResultSet query(const std::string& sql, const std::vector<Value>& params,
                  const std::vector<ColumnMeta>& columns = {}) const;

 private:
  explicit Database(sqlite3* db) : db_(db) {}
  sqlite3* db_ = nullptr;
};

ResultSet run_query(const Database& db, const CompiledQuery& q);
// Compiles and runs against the ring's database.
ResultSet execute_plan(const Ring& ring, const SqrPlan& plan);

// Builds a SQLite file holding every ring table from <csv_dir>/<table>.csv.
void load_seed_db(const Ring& ring, const std::filesystem::path& csv_dir, const std::filesystem::path& out);

}  // namespace aag
