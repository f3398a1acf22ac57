#include "aag/sqlite_db.hpp"

#include <sqlite3.h>
#include <unistd.h>

#include "aag/csv.hpp"
#include "aag/error.hpp"

namespace aag {

namespace {

[[noreturn]] void fail(sqlite3* db, const std::string& what, const std::string& sql) {
  std::string msg = what + ": " + (db ? sqlite3_errmsg(db) : "out of memory");
  throw Error(ErrorCode::DbError, msg + (sql.empty() ? "" : "\n  sql: " + sql));
}

struct Stmt {
  sqlite3_stmt* s = nullptr;
  ~Stmt() { sqlite3_finalize(s); }
};

void bind(sqlite3* db, sqlite3_stmt* s, int i, const Value& v, const std::string& sql) {
  int rc = std::visit(
      [&](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return sqlite3_bind_null(s, i);
        else if constexpr (std::is_same_v<T, std::int64_t>) return sqlite3_bind_int64(s, i, x);
        else if constexpr (std::is_same_v<T, double>) return sqlite3_bind_double(s, i, x);
        else if constexpr (std::is_same_v<T, bool>) return sqlite3_bind_int(s, i, x ? 1 : 0);
        else return sqlite3_bind_text(s, i, x.c_str(), static_cast<int>(x.size()), SQLITE_TRANSIENT);
      },
      v);
  if (rc != SQLITE_OK) fail(db, "bind ?" + std::to_string(i), sql);
}

}  // namespace

Database Database::open(const std::filesystem::path& path, bool read_only) {
  if (read_only && !std::filesystem::exists(path)) {
    throw Error(ErrorCode::DbError, "database not found: " + path.string());
  }
  sqlite3* db = nullptr;
  int flags = read_only ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  if (sqlite3_open_v2(path.c_str(), &db, flags | SQLITE_OPEN_NOMUTEX, nullptr) != SQLITE_OK) {
    Database guard(db);
    fail(db, "open " + path.string(), "");
  }
  return Database(db);
}

Database Database::memory() {
  sqlite3* db = nullptr;
  if (sqlite3_open(":memory:", &db) != SQLITE_OK) {
    Database guard(db);
    fail(db, "open :memory:", "");
  }
  return Database(db);
}

Database& Database::operator=(Database&& o) noexcept {
  if (this != &o) {
    sqlite3_close(db_);
    db_ = o.db_;
    o.db_ = nullptr;
  }
  return *this;
}

Database::~Database() { sqlite3_close(db_); }

void Database::exec(const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::DbError, msg + "\n  sql: " + sql);
  }
}

ResultSet Database::query(const std::string& sql, const std::vector<Value>& params,
                          const std::vector<ColumnMeta>& columns) const {
  Stmt st;
  if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &st.s, nullptr) != SQLITE_OK) fail(db_, "prepare", sql);
  for (std::size_t i = 0; i < params.size(); ++i) bind(db_, st.s, static_cast<int>(i + 1), params[i], sql);

  ResultSet rs;
  int n = sqlite3_column_count(st.s);
  if (!columns.empty() && static_cast<int>(columns.size()) != n) {
    throw Error(ErrorCode::DbError, "query yields " + std::to_string(n) + " columns, expected " +
                                        std::to_string(columns.size()) + "\n  sql: " + sql);
  }
  rs.columns = columns;
  if (columns.empty()) {
    for (int i = 0; i < n; ++i) {
      std::string name = sqlite3_column_name(st.s, i);
      rs.columns.push_back({name, name, {}, std::nullopt});
    }
  }
  int rc;
  while ((rc = sqlite3_step(st.s)) == SQLITE_ROW) {
    std::vector<Value> row;
    for (int i = 0; i < n; ++i) {
      switch (sqlite3_column_type(st.s, i)) {
        case SQLITE_INTEGER: {
          auto v = sqlite3_column_int64(st.s, i);
          if (rs.columns[i].types.contains(AttributeType::Filter)) row.emplace_back(v != 0);
          else row.emplace_back(static_cast<std::int64_t>(v));
          break;
        }
        case SQLITE_FLOAT:
          row.emplace_back(sqlite3_column_double(st.s, i));
          break;
        case SQLITE_TEXT:
        case SQLITE_BLOB:
          row.emplace_back(std::string(reinterpret_cast<const char*>(sqlite3_column_text(st.s, i)),
                                       static_cast<std::size_t>(sqlite3_column_bytes(st.s, i))));
          break;
        default:
          row.emplace_back(std::monostate{});
      }
    }
    rs.rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) fail(db_, "step", sql);
  return rs;
}

ResultSet run_query(const Database& db, const CompiledQuery& q) { return db.query(q.sql, q.params, q.output_columns); }

ResultSet execute_plan(const Ring& ring, const SqrPlan& plan) {
  auto q = compile(ring, plan);
  auto db = Database::open(sqlite_path(ring));
  return run_query(db, q);
}

void load_seed_db(const Ring& ring, const std::filesystem::path& csv_dir, const std::filesystem::path& out) {
  auto tmp = out;
  tmp += ".tmp." + std::to_string(::getpid());
  std::filesystem::remove(tmp);
  try {
    auto db = Database::open(tmp, false);
    db.exec("BEGIN");
    for (const auto& t : ring.tables) {
      std::string cols, marks;
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        const auto& c = t.columns[i];
        std::string type = c.type == "integer" ? "INTEGER" : c.type == "real" ? "REAL" : "TEXT";
        cols += (i ? ", \"" : "\"") + c.name + "\" " + type;
        marks += i ? ", ?" : "?";
      }
      db.exec("CREATE TABLE \"" + t.name + "\" (" + cols + ")");
      auto path = csv_dir / (t.name + ".csv");
      auto csv = load_csv(path);
      std::vector<std::size_t> pos;
      for (const auto& c : t.columns) {
        auto it = std::find(csv.header.begin(), csv.header.end(), c.name);
        if (it == csv.header.end()) {
          throw Error(ErrorCode::MissingColumn, "column '" + c.name + "' missing from header", path.string());
        }
        pos.push_back(static_cast<std::size_t>(it - csv.header.begin()));
      }
      std::string sql = "INSERT INTO \"" + t.name + "\" VALUES (" + marks + ")";
      for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        std::vector<Value> vals;
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
          auto origin = path.filename().string() + ":" + std::to_string(r + 2);
          vals.push_back(parse_cell(csv.rows[r][pos[i]], t.columns[i].type, origin));
        }
        db.query(sql, vals);
      }
    }
    db.exec("COMMIT");
  } catch (...) {
    std::filesystem::remove(tmp);
    throw;
  }
  std::filesystem::rename(tmp, out);
}

}  // namespace aag
