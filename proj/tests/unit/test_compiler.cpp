#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <unistd.h>

#include "coverage.hpp"

using namespace aag;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

fs::path plan_path(const std::string& name) { return aag::testing::source_dir() / "fixtures" / "plans" / (name + ".json"); }

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("aag_" + tag + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Seeded {
  TempDir dir{"compiler"};
  Ring ring;
  MemoryDataset data;
  Seeded() {
    load_seed_db(load_ring(aag::testing::wildfire_dir() / "ring.json"), aag::testing::wildfire_dir(),
                 dir.path / "w.db");
    ring = aag::testing::wildfire_ring(dir.path / "w.db");
    data = load_dataset(ring, aag::testing::wildfire_dir());
  }
};

}  // namespace

TEST_CASE("decomposition") {
  auto by_state = load_plan(plan_path("average_size_by_state"));
  auto sp = decompose(by_state);
  REQUIRE(sp.size() == 1);
  CHECK(sp[0].id == 1);
  CHECK(sp[0].steps.size() == by_state.steps().size());
  CHECK(sp[0].produces == "J");
  CHECK(std::set<std::string>(sp[0].entities.begin(), sp[0].entities.end()) ==
        std::set<std::string>{"State", "Wildfire"});

  auto nested = decompose(load_plan(plan_path("max_state_average")));
  REQUIRE(nested.size() == 2);
  CHECK(nested[1].consumes == std::vector<std::size_t>{1});
  CHECK(nested[1].produces == "M");

  // Every label lands in exactly one subplan.
  std::set<std::string> seen;
  for (const auto& s : nested) {
    for (const auto& l : s.steps) CHECK(seen.insert(l).second);
  }
  CHECK(seen.size() == load_plan(plan_path("max_state_average")).steps().size());
}

TEST_CASE("join resolution") {
  auto ring = aag::testing::wildfire_ring();
  auto sp = decompose(load_plan(plan_path("average_size_by_state")));
  auto j = resolve_joins(ring, sp[0]);
  CHECK(j.required_tables == std::vector<std::string>{"states", "wildfires"});
  REQUIRE(j.join_sequence.size() == 1);
  CHECK(j.join_sequence[0].origin == "fires_in_state");
  CHECK(j.join_sequence[0].join.name == "wildfire_state");

  SUBCASE("missing relationship") {
    auto doc = load_json(aag::testing::wildfire_dir() / "ring.json");
    doc["relationships"] = Json::array();
    auto bare = derive_attributes(parse_ring(doc, aag::testing::wildfire_dir()));
    CHECK(code_of([&] { resolve_joins(bare, sp[0]); }) == ErrorCode::NoRelationship);
  }
}

TEST_CASE("SQL shape") {
  auto ring = aag::testing::wildfire_ring();
  auto q = compile(ring, load_plan(plan_path("average_size_by_state")));
  CHECK(q.sql ==
        "SELECT t0.\"name\" AS c0, AVG(t1.\"size_acres\") AS c1 FROM \"states\" AS t0 JOIN \"wildfires\" AS t1 ON "
        "t1.\"state_id\" = t0.\"id\" WHERE (t1.\"year\" = ?1) GROUP BY t0.\"name\" ORDER BY t0.\"name\" ASC");
  CHECK(q.params == std::vector<Value>{std::int64_t{2020}});
  CHECK_FALSE(q.ordered);
  REQUIRE(q.output_columns.size() == 2);
  CHECK(q.output_columns[1].nicename == "average wildfire size");

  auto nested = compile(ring, load_plan(plan_path("max_state_average")));
  CHECK(nested.sql.rfind("WITH sp1 AS (", 0) == 0);

  // Compilation is a pure function of its inputs.
  CHECK(compile(ring, load_plan(plan_path("max_state_average"))).sql == nested.sql);
}

TEST_CASE("unsupported shapes are reported, not miscompiled") {
  auto ring = aag::testing::wildfire_ring();
  auto plan = parse_plan_text(R"({"format": "sqr_plan_v1", "steps": {
    "A": {"op": "retrieve_entity", "args": ["State"]},
    "B": {"op": "retrieve_attribute", "args": ["|A|", "name"]},
    "C": {"op": "collect", "args": ["|B|"]},
    "D": {"op": "return", "args": ["|C|"]},
    "E": {"op": "retrieve_attribute", "args": ["|D|", "name"]},
    "F": {"op": "retrieve_entity", "args": ["Wildfire"]},
    "G": {"op": "retrieve_attribute", "args": ["|F|", "size"]},
    "H": {"op": "collect", "args": ["|E|", "|G|"]},
    "I": {"op": "return", "args": ["|H|"]}}, "result": "I"})");
  CHECK(code_of([&] { compile(ring, plan); }) == ErrorCode::UnsupportedPattern);
}

TEST_CASE("execution against the seed database") {
  Seeded s;
  auto db = Database::open(s.dir.path / "w.db");
  for (const auto* name : {"average_size_by_state", "max_state_average", "retrieve_size"}) {
    CAPTURE(name);
    auto cmp = aag::testing::compare_with_oracle(s.ring, s.data, db, load_plan(plan_path(name)));
    CHECK_MESSAGE(cmp.ok, cmp.detail);
  }
  auto by_state = run_query(db, compile(s.ring, load_plan(plan_path("average_size_by_state"))));
  REQUIRE(by_state.rows.size() == 2);
  CHECK(by_state.rows[0][0] == Value{std::string("California")});
  CHECK(std::get<double>(by_state.rows[0][1]) == doctest::Approx(6400.5));
  CHECK(std::get<double>(by_state.rows[1][1]) == doctest::Approx(355.375));
}

TEST_CASE("database errors") {
  CHECK(code_of([] { Database::open("/nonexistent/dir/x.db"); }) == ErrorCode::DbError);
  auto db = Database::memory();
  db.exec("CREATE TABLE t (a INTEGER)");
  db.exec("INSERT INTO t VALUES (1), (NULL)");
  auto rs = db.query("SELECT a FROM t ORDER BY a", {});
  REQUIRE(rs.rows.size() == 2);
  CHECK(is_null(rs.rows[0][0]));
  try {
    db.query("SELECT nope FROM t", {});
    FAIL("expected DbError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DbError);
    CHECK(std::string(e.what()).find("sql: SELECT nope") != std::string::npos);
  }
  CHECK(code_of([&] { db.query("SELECT a, a FROM t", {}, {ColumnMeta{"a", "a", {}, {}}}); }) == ErrorCode::DbError);
  auto flags = db.query("SELECT a = 1 FROM t WHERE a IS NOT NULL", {},
                        {ColumnMeta{"f", "f", TypeSet{AttributeType::Filter}, std::nullopt}});
  CHECK(flags.rows[0][0] == Value{true});
}

TEST_CASE("seed loading rejects mismatched CSV headers") {
  TempDir dir("seed");
  std::ofstream(dir.path / "states.csv") << "id,label\n1,California\n";
  std::ofstream(dir.path / "wildfires.csv") << "id,state_id,size_acres,year\n";
  auto ring = load_ring(aag::testing::wildfire_dir() / "ring.json");
  CHECK(code_of([&] { load_seed_db(ring, dir.path, dir.path / "x.db"); }) == ErrorCode::MissingColumn);
  CHECK_FALSE(fs::exists(dir.path / "x.db"));
}

// Random small datasets with NULLs, ties and empty groups; a sample of the
// template instances must agree with the reference evaluator on each.
TEST_CASE("property: compiled SQL agrees with the oracle on random data") {
  auto lib = load_library(aag::testing::source_dir());
  std::mt19937 rng(20240611);
  const std::vector<std::string> names = {"California", "Texas", "Oregon", "Nevada", "Utah"};
  const std::vector<std::string> sizes = {"", "10", "10", "25.5", "100.25", "0", "3000", "7.125"};
  const std::vector<std::string> years = {"", "2010", "2015", "2020", "2020"};
  std::size_t compared = 0;
  for (int trial = 0; trial < 12; ++trial) {
    CAPTURE(trial);
    TempDir dir("prop" + std::to_string(trial));
    auto pool = names;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t n_states = 1 + rng() % pool.size();
    {
      std::ofstream st(dir.path / "states.csv");
      st << "id,name\n";
      for (std::size_t i = 0; i < n_states; ++i) st << i + 1 << "," << pool[i] << "\n";
      std::ofstream wf(dir.path / "wildfires.csv");
      wf << "id,state_id,size_acres,year\n";
      std::size_t n_fires = rng() % 14;
      for (std::size_t i = 0; i < n_fires; ++i) {
        wf << i + 1 << "," << 1 + rng() % n_states << "," << sizes[rng() % sizes.size()] << ","
           << years[rng() % years.size()] << "\n";
      }
    }
    auto base = load_ring(aag::testing::wildfire_dir() / "ring.json");
    load_seed_db(base, dir.path, dir.path / "w.db");
    auto ring = aag::testing::wildfire_ring(dir.path / "w.db");
    auto data = load_dataset(ring, dir.path);
    auto db = Database::open(dir.path / "w.db");
    auto cases = aag::testing::coverage_cases(ring, lib);
    std::shuffle(cases.begin(), cases.end(), rng);
    cases.resize(std::min<std::size_t>(cases.size(), 80));
    for (const auto& c : cases) {
      auto cmp = aag::testing::compare_with_oracle(ring, data, db, c.plan);
      CHECK_MESSAGE(cmp.ok, c.name << ": " << cmp.detail);
      ++compared;
    }
  }
  CHECK(compared == 12 * 80);
}

TEST_CASE("property: the comparison detects a perturbed dataset") {
  Seeded s;
  auto db = Database::open(s.dir.path / "w.db");
  auto plan = load_plan(plan_path("average_size_by_state"));
  auto& rows = s.data.tables.at("wildfires").rows;
  rows[1][2] = Value{301.25};
  auto cmp = aag::testing::compare_with_oracle(s.ring, s.data, db, plan);
  CHECK_FALSE(cmp.ok);
  CHECK_FALSE(cmp.detail.empty());
}
