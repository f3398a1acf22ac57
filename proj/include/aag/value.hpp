#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aag/attribute_type.hpp"

namespace aag {

// NULL, integer, binary float, text, boolean.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }
bool is_numeric(const Value& v);
std::optional<double> as_double(const Value& v);

// Total order matching SQLite's default collation: NULL < numbers < text.
// Booleans order as 0/1 integers.
int compare_values(const Value& a, const Value& b);
// SQL equality: false whenever either side is NULL.
bool sql_equal(const Value& a, const Value& b);
// SQLite's CAST(x AS TEXT) rendering; floats use 15 significant digits.
std::string sql_text(const Value& v);
std::string debug_string(const Value& v);

struct Units {
  std::string singular;
  std::string plural;
  bool operator==(const Units&) const = default;
};

struct ColumnMeta {
  std::string name;
  std::string nicename;
  TypeSet types;
  std::optional<Units> units;
  bool operator==(const ColumnMeta&) const = default;
};

struct TypedValue {
  TypeSet kind;
  Value value;
  std::optional<Units> units;
  std::string nicename;
};

struct ResultSet {
  std::vector<ColumnMeta> columns;
  std::vector<std::vector<Value>> rows;

  TypedValue typed(std::size_t row, std::size_t col) const;
  std::size_t column_index(const std::string& name) const;  // npos when absent
};

bool is_percent(const std::optional<Units>& u);

}  // namespace aag
