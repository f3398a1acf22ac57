#include "aag/value.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace aag {

bool is_numeric(const Value& v) {
  return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v) ||
         std::holds_alternative<bool>(v);
}

std::optional<double> as_double(const Value& v) {
  if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  return std::nullopt;
}

namespace {

int rank(const Value& v) {
  if (is_null(v)) return 0;
  if (is_numeric(v)) return 1;
  return 2;
}

std::int64_t as_int(const Value& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1 : 0;
  return std::get<std::int64_t>(v);
}

bool integral(const Value& v) { return std::holds_alternative<std::int64_t>(v) || std::holds_alternative<bool>(v); }

}  // namespace

int compare_values(const Value& a, const Value& b) {
  int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra == 0) return 0;
  if (ra == 1) {
    if (integral(a) && integral(b)) {
      auto x = as_int(a), y = as_int(b);
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    double x = *as_double(a), y = *as_double(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  int c = std::get<std::string>(a).compare(std::get<std::string>(b));
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool sql_equal(const Value& a, const Value& b) {
  if (is_null(a) || is_null(b)) return false;
  return compare_values(a, b) == 0;
}

std::string sql_text(const Value& v) {
  if (is_null(v)) return "";
  if (auto* s = std::get_if<std::string>(&v)) return *s;
  if (integral(v)) return std::to_string(as_int(v));
  double d = std::get<double>(v);
  if (std::isinf(d)) return d > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", d);
  std::string s = buf;
  if (s.find_first_of(".n") == std::string::npos) {
    auto e = s.find('e');
    if (e == std::string::npos)
      s += ".0";
    else
      s.insert(e, ".0");
  }
  return s;
}

std::string debug_string(const Value& v) {
  if (is_null(v)) return "NULL";
  if (auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto* s = std::get_if<std::string>(&v)) return "'" + *s + "'";
  return sql_text(v);
}

TypedValue ResultSet::typed(std::size_t row, std::size_t col) const {
  const auto& c = columns.at(col);
  return TypedValue{c.types, rows.at(row).at(col), c.units, c.nicename};
}

std::size_t ResultSet::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::string::npos;
}

bool is_percent(const std::optional<Units>& u) { return u && u->singular == "%"; }

}  // namespace aag
