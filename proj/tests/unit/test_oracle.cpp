#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <unistd.h>

#include "coverage.hpp"

using namespace aag;
namespace fs = std::filesystem;

namespace {

ResultSet table(std::vector<std::vector<Value>> rows) {
  ResultSet rs;
  rs.columns = {{"a", "a", {}, {}}, {"b", "b", {}, {}}};
  rs.rows = std::move(rows);
  return rs;
}

SqrPlan plan(const char* text) { return parse_plan_text(text); }

}  // namespace

TEST_CASE("dataset loading") {
  auto ring = aag::testing::wildfire_ring();
  auto data = load_dataset(ring, aag::testing::wildfire_dir());
  const auto& fires = data.tables.at("wildfires");
  CHECK(fires.rows.size() == 6);
  CHECK(fires.column_index("year") == 3);
  CHECK(fires.rows[0][2] == Value{1200.5});
  try {
    fires.column_index("acres");
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
  }

  auto dir = fs::temp_directory_path() / ("aag_oracle_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::ofstream(dir / "states.csv") << "name,id\nCalifornia,1\n";
  std::ofstream(dir / "wildfires.csv") << "id,state_id,size_acres,year\n";
  try {
    load_dataset(ring, dir);
    FAIL("expected MissingColumn");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingColumn);
  }
  fs::remove_all(dir);
}

TEST_CASE("result comparison") {
  auto a = table({{std::int64_t{1}, 2.0}, {std::int64_t{2}, Value{}}});
  auto b = table({{std::int64_t{2}, Value{}}, {std::int64_t{1}, 2.0 + 1e-12}});
  std::string why;
  CHECK(results_match(a, b, false, 1e-9, &why));
  CHECK_FALSE(results_match(a, b, true, 1e-9, &why));
  CHECK_FALSE(why.empty());

  SUBCASE("tolerance is relative") {
    auto big = table({{std::int64_t{1}, 1e12}});
    auto near = table({{std::int64_t{1}, 1e12 + 1.0}});
    CHECK(results_match(big, near, true));
    auto far = table({{std::int64_t{1}, 1e12 * (1 + 1e-6)}});
    CHECK_FALSE(results_match(big, far, true));
  }
  SUBCASE("kinds must agree exactly") {
    CHECK_FALSE(results_match(table({{std::int64_t{1}, 2.0}}), table({{std::int64_t{1}, std::int64_t{2}}}), true));
    CHECK_FALSE(results_match(table({{std::string("x"), 2.0}}), table({{std::string("X"), 2.0}}), true));
    CHECK_FALSE(results_match(table({{std::int64_t{1}, 2.0}}), table({}), true));
  }
  SUBCASE("canonical order") {
    auto c = canonicalize(table({{std::int64_t{2}, 1.0}, {Value{}, 3.0}, {std::int64_t{1}, 2.0}}));
    CHECK(is_null(c.rows[0][0]));
    CHECK(c.rows[1][0] == Value{std::int64_t{1}});
  }
}

TEST_CASE("reference semantics on the seed data") {
  auto ring = aag::testing::wildfire_ring();
  auto data = load_dataset(ring, aag::testing::wildfire_dir());

  auto by_state = oracle_eval(ring, data, load_plan(aag::testing::source_dir() / "fixtures" / "plans" /
                                                "average_size_by_state.json"));
  REQUIRE(by_state.rows.size() == 2);
  CHECK(by_state.rows[0][1] == Value{6400.5});
  CHECK(by_state.rows[1][1] == Value{355.375});

  SUBCASE("median and population standard deviation") {
    auto rs = oracle_eval(ring, data, plan(R"({"format": "sqr_plan_v1", "steps": {
      "A": {"op": "retrieve_entity", "args": ["Wildfire"]},
      "B": {"op": "retrieve_attribute", "args": ["|A|", "size"]},
      "C": {"op": "median", "args": ["|B|"]},
      "D": {"op": "standard_deviation", "args": ["|B|"]},
      "E": {"op": "count", "args": ["|B|"]},
      "F": {"op": "collect", "args": ["|C|", "|D|", "|E|"]},
      "G": {"op": "return", "args": ["|F|"]}}, "result": "G"})"));
    REQUIRE(rs.rows.size() == 1);
    // sizes: 90.25 300.25 620.5 850 1200.5 12500.75
    CHECK(std::get<double>(rs.rows[0][0]) == doctest::Approx((620.5 + 850.0) / 2));
    double mean = (90.25 + 300.25 + 620.5 + 850.0 + 1200.5 + 12500.75) / 6;
    double var = 0;
    for (double x : {90.25, 300.25, 620.5, 850.0, 1200.5, 12500.75}) var += (x - mean) * (x - mean);
    CHECK(std::get<double>(rs.rows[0][1]) == doctest::Approx(std::sqrt(var / 6)));
    CHECK(rs.rows[0][2] == Value{std::int64_t{6}});
  }
  SUBCASE("descending sort with a limit, ties broken by identifier") {
    auto rs = oracle_eval(ring, data, plan(R"({"format": "sqr_plan_v1", "steps": {
      "A": {"op": "retrieve_entity", "args": ["Wildfire"]},
      "B": {"op": "retrieve_attribute", "args": ["|A|", "id"]},
      "C": {"op": "retrieve_attribute", "args": ["|A|", "year"]},
      "D": {"op": "sort", "args": ["|C|", "desc"]},
      "E": {"op": "limit", "args": [3]},
      "F": {"op": "collect", "args": ["|B|", "|C|"]},
      "G": {"op": "return", "args": ["|F|", "|D|", "|E|"]}}, "result": "G"})"));
    REQUIRE(rs.rows.size() == 3);
    CHECK(rs.rows[0][0] == Value{std::int64_t{2}});
    CHECK(rs.rows[1][0] == Value{std::int64_t{3}});
    CHECK(rs.rows[2][0] == Value{std::int64_t{5}});
  }
  SUBCASE("percent change of a zero start is NULL") {
    auto rs = oracle_eval(ring, data, plan(R"({"format": "sqr_plan_v1", "steps": {
      "A": {"op": "percent_change", "args": [0, 5]},
      "B": {"op": "divide", "args": [1, 0]},
      "C": {"op": "collect", "args": ["|A|", "|B|"]},
      "D": {"op": "return", "args": ["|C|"]}}, "result": "D"})"));
    REQUIRE(rs.rows.size() == 1);
    CHECK(is_null(rs.rows[0][0]));
    CHECK(is_null(rs.rows[0][1]));
  }
}
