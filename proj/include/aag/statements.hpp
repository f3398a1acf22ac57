#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aag/io.hpp"
#include "aag/value.hpp"

namespace aag {

// ---- value formatting ----------------------------------------------------------

// Integers plain, floats to 2 places (half-even on the exact binary value),
// thousands separators from 10,000 up, percent units as a "%" suffix,
// midnight timestamps as dates, booleans as yes/no, NULL as "unknown".
std::string format_value(const TypedValue& v);
// format_value plus units ("6,400.50 acres", "1 acre"); percent stays "12.5%".
std::string format_with_units(const TypedValue& v);
// "a", "a and b", "a, b, and c".
std::string join_list(const std::vector<std::string>& items);
std::string title_case(const std::string& s);

// ---- statements ------------------------------------------------------------------

enum class RowShape { One, Many };

// Placeholders: {name} for inputs; {value:N} column N with units; {number:N}
// without units; {flag:N|true text|false text}; {list:N:M} every row as
// "<col N> (<col M with units>)".
struct StatementTemplate {
  std::string id;
  std::string text;
  std::optional<std::string> null_text;  // used when a referenced cell is NULL or no row exists
  RowShape rows = RowShape::One;
};

struct StatementInputs {
  std::map<std::string, std::string> text;
  std::vector<TypedValue> values;  // raw values behind numbers in the inputs (audit)
};

struct FactStatement {
  std::string text;
  std::string source_plan;
  std::vector<TypedValue> values;
};

StatementTemplate parse_statement_template(const Json& j, const std::string& origin);
std::map<std::string, StatementTemplate> load_statement_templates(const std::filesystem::path& path);
Json statement_template_to_json(const StatementTemplate& t);

// Placeholder names a template uses, in order of appearance.
std::vector<std::string> placeholders(const std::string& text);

FactStatement render_statement(const StatementTemplate& tmpl, const ResultSet& result, const StatementInputs& inputs);

// Pipe-delimited table: title-cased column nicenames with units in
// parentheses, then one line per row.
std::string render_table(const ResultSet& result);

}  // namespace aag
