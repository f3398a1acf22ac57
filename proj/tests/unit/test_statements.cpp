#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "aag/statements.hpp"
#include "coverage.hpp"

using namespace aag;
using T = AttributeType;

namespace {

const Units kAcres{"acre", "acres"};
const Units kPercent{"%", "%"};

TypedValue tv(Value v, TypeSet kind = {T::Arithmetic, T::Metric}, std::optional<Units> u = std::nullopt) {
  return {kind, std::move(v), std::move(u), ""};
}

ResultSet one_row(std::vector<ColumnMeta> cols, std::vector<Value> row) {
  ResultSet rs;
  rs.columns = std::move(cols);
  rs.rows.push_back(std::move(row));
  return rs;
}

ColumnMeta col(std::string nice, TypeSet types = {T::Arithmetic, T::Metric}, std::optional<Units> u = kAcres) {
  return {nice, nice, types, u};
}

StatementTemplate tmpl(const std::string& text, std::optional<std::string> null_text = std::nullopt,
                       RowShape rows = RowShape::One) {
  return {"t", text, null_text, rows};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_value(tv(std::int64_t{42})) == "42");
  CHECK(format_value(tv(std::int64_t{9999})) == "9999");
  CHECK(format_value(tv(std::int64_t{12345})) == "12,345");
  CHECK(format_value(tv(std::int64_t{-1234567})) == "-1,234,567");
  CHECK(format_value(tv(6400.5)) == "6400.50");
  CHECK(format_value(tv(12500.75)) == "12,500.75");
  CHECK(format_value(tv(355.375)) == "355.38");  // exactly representable: half-even
  CHECK(format_value(tv(0.125)) == "0.12");
  CHECK(format_value(tv(-0.001)) == "0.00");
  CHECK(format_value(tv(Value{})) == "unknown");
  CHECK(format_value(tv(true, {T::Filter})) == "yes");
  CHECK(format_value(tv(false, {T::Filter})) == "no");
  CHECK(format_value(tv(433.149, {T::Arithmetic}, kPercent)) == "433.15%");

  SUBCASE("identifiers and years keep their digits") {
    CHECK(format_value(tv(std::int64_t{20200}, {T::Identifier})) == "20200");
    CHECK(format_value(tv(std::int64_t{20200}, {T::Datetime})) == "20200");
  }
  SUBCASE("dates") {
    CHECK(format_value(tv(std::string("2020-05-01 00:00:00"), {T::Datetime})) == "2020-05-01");
    CHECK(format_value(tv(std::string("2020-05-01 13:30:00"), {T::Datetime})) == "2020-05-01 13:30:00");
    CHECK(format_value(tv(std::string("2020-05-01 00:00:00"), {T::String})) == "2020-05-01 00:00:00");
  }
  SUBCASE("units") {
    CHECK(format_with_units(tv(6400.5, {T::Metric}, kAcres)) == "6400.50 acres");
    CHECK(format_with_units(tv(std::int64_t{1}, {T::Metric}, kAcres)) == "1 acre");
    CHECK(format_with_units(tv(1.0, {T::Metric}, kAcres)) == "1.00 acres");
    CHECK(format_with_units(tv(12.5, {T::Metric}, kPercent)) == "12.50%");
    CHECK(format_with_units(tv(Value{}, {T::Metric}, kAcres)) == "unknown");
  }
}

TEST_CASE("lists and titles") {
  CHECK(join_list({}) == "");
  CHECK(join_list({"a"}) == "a");
  CHECK(join_list({"a", "b"}) == "a and b");
  CHECK(join_list({"a", "b", "c"}) == "a, b, and c");
  CHECK(title_case("average wildfire size") == "Average Wildfire Size");
}

TEST_CASE("statement rendering") {
  StatementInputs in;
  in.text = {{"metric", "average wildfire size"}, {"target", "Texas"}, {"conditions", " (where year is 2020)"}};
  auto rs = one_row({col("state", {T::Identifier}, std::nullopt), col("average wildfire size")},
                    {std::string("Texas"), 355.375});
  auto t = tmpl("The {metric} for {target} was {value:1}{conditions}.", "No {metric} for {target}{conditions}.");

  auto s = render_statement(t, rs, in);
  CHECK(s.text == "The average wildfire size for Texas was 355.38 acres (where year is 2020).");
  CHECK(s.source_plan == "t");
  REQUIRE(s.values.size() == 1);
  CHECK(s.values[0].value == Value{355.375});

  SUBCASE("number and flag placeholders") {
    auto flagged = one_row({col("x"), col("y"), col("flag", {T::Filter}, std::nullopt)}, {1.0, 2.0, false});
    auto f = render_statement(tmpl("{number:0} vs {value:1}: {flag:2|above|not above}."), flagged, in);
    CHECK(f.text == "1.00 vs 2.00 acres: not above.");
  }
  SUBCASE("lists over many rows") {
    ResultSet many;
    many.columns = {col("state", {T::Identifier}, std::nullopt), col("size")};
    many.rows = {{std::string("A"), 3.0}, {std::string("B"), 2.0}, {std::string("C"), 1.0}};
    auto l = render_statement(tmpl("Top: {list:0:1}.", std::nullopt, RowShape::Many), many, in);
    CHECK(l.text == "Top: A (3.00 acres), B (2.00 acres), and C (1.00 acres).");
    CHECK(code_of([&] { render_statement(t, many, in); }) == ErrorCode::UnexpectedRowCount);
  }
  SUBCASE("null and empty results use the null text") {
    auto nulls = one_row(rs.columns, {std::string("Texas"), Value{}});
    CHECK(render_statement(t, nulls, in).text == "No average wildfire size for Texas (where year is 2020).");
    ResultSet empty;
    empty.columns = rs.columns;
    CHECK(render_statement(t, empty, in).text == "No average wildfire size for Texas (where year is 2020).");
    CHECK(code_of([&] { render_statement(tmpl("{value:1}."), empty, in); }) == ErrorCode::UnexpectedRowCount);
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { render_statement(tmpl("{value:7}."), rs, in); }) == ErrorCode::MissingColumn);
    CHECK(code_of([&] { render_statement(tmpl("{unknown}."), rs, in); }) == ErrorCode::UnboundSlot);
  }
}

TEST_CASE("statement template documents") {
  auto ok = Json::parse(R"({"id": "x", "text": "Value {value:0}.", "rows": "one"})");
  CHECK(parse_statement_template(ok, "x").rows == RowShape::One);
  CHECK(placeholders("A {metric} and {value:0}{conditions}.") ==
        std::vector<std::string>{"metric", "value:0", "conditions"});

  auto bad = ok;
  bad["text"] = "Value {value:0";
  CHECK(code_of([&] { parse_statement_template(bad, "x"); }) == ErrorCode::ParseError);
  bad = ok;
  bad["rows"] = "few";
  CHECK(code_of([&] { parse_statement_template(bad, "x"); }) == ErrorCode::ParseError);

  auto round = parse_statement_template(statement_template_to_json(parse_statement_template(ok, "x")), "x");
  CHECK(round.text == "Value {value:0}.");

  auto shipped = load_statement_templates(aag::testing::source_dir() / "templates" / "statements_v1.json");
  CHECK(shipped.size() == 16);
  for (const auto& [id, t] : shipped) {
    CAPTURE(id);
    CHECK(t.text.back() == '.');
    if (t.null_text) CHECK(t.null_text->back() == '.');
  }
}

TEST_CASE("tables") {
  ResultSet rs;
  rs.columns = {col("state", {T::Identifier}, std::nullopt), col("average wildfire size"),
                col("percent change in size", {T::Arithmetic}, kPercent)};
  rs.rows = {{std::string("California"), 6400.5, 433.149}, {std::string("Texas"), Value{}, Value{}}};
  CHECK(render_table(rs) ==
        "State | Average Wildfire Size (acres) | Percent Change In Size (%)\n"
        "California | 6400.50 | 433.15%\n"
        "Texas | unknown | unknown");
}
