#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include "aag/typecheck.hpp"
#include "coverage.hpp"

using namespace aag;
namespace fs = std::filesystem;

namespace {

Json request(const char* type = "ranking") {
  return Json{{"format", "report_request_v1"},
              {"report_type", type},
              {"target", {{"entity", "State"}, {"value", "California"}}},
              {"metric", "average wildfire size"},
              {"filters", Json::array({Json{{"attribute", "year"}, {"op", "exact"}, {"value", 2020}}})}};
}

std::vector<std::string> violation_paths(const Ring& ring, const Json& doc) {
  try {
    parse_request(ring, doc, "req");
  } catch (const ValidationError& e) {
    std::vector<std::string> out;
    for (const auto& v : e.violations()) out.push_back(v.path);
    return out;
  }
  return {};
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

struct Fixture {
  fs::path dir;
  Ring ring;
  Library lib;
  Fixture() {
    dir = fs::temp_directory_path() / ("aag_bp_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    load_seed_db(load_ring(aag::testing::wildfire_dir() / "ring.json"), aag::testing::wildfire_dir(), dir / "w.db");
    ring = aag::testing::wildfire_ring(dir / "w.db");
    lib = load_library(aag::testing::source_dir());
  }
  ~Fixture() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  ReportRequest load(const std::string& name) const {
    return load_request(ring, aag::testing::source_dir() / "fixtures" / "requests" / (name + ".json"));
  }
};

}  // namespace

TEST_CASE("request parsing") {
  auto ring = aag::testing::wildfire_ring();
  auto req = parse_request(ring, request());
  CHECK(req.report_type == ReportType::Ranking);
  CHECK(req.metric.entity == "Wildfire");
  CHECK(req.metric.attribute == "average size");
  REQUIRE(req.filters.size() == 1);
  CHECK(req.filters[0].attribute.attribute == "year");

  SUBCASE("qualified names and ranges") {
    auto doc = request("time_over_time");
    doc["metric"] = "Wildfire.median size";
    doc["time_attribute"] = "Wildfire.year";
    doc["start_time"] = Json{{"from", 2000}, {"to", 2015}};
    doc["end_time"] = 2020;
    auto r = parse_request(ring, doc);
    CHECK(r.metric.attribute == "median size");
    CHECK(r.start_time->is_range());
    CHECK_FALSE(r.end_time->is_range());
  }
  SUBCASE("validation") {
    auto doc = request();
    doc["metric"] = "state";
    CHECK(contains(violation_paths(ring, doc), "req/metric"));  // not a Metric

    doc = request();
    doc["metric"] = "wildfire size";
    CHECK(contains(violation_paths(ring, doc), "req/metric"));  // base metric on another entity

    doc = request();
    doc["metric"] = "rainfall";
    CHECK(contains(violation_paths(ring, doc), "req/metric"));

    doc = request();
    doc["report_type"] = "forecast";
    CHECK(contains(violation_paths(ring, doc), "req/report_type"));

    doc = request();
    doc["target"]["entity"] = "County";
    CHECK(contains(violation_paths(ring, doc), "req/target/entity"));

    doc = request();
    doc["filters"][0]["op"] = "like";
    CHECK(contains(violation_paths(ring, doc), "req/filters/0/op"));

    doc = request();
    doc["filters"][0]["value"] = "recent";
    CHECK(contains(violation_paths(ring, doc), "req/filters/0/value"));

    doc = request();
    doc["filters"][0]["attribute"] = "average size";
    CHECK(contains(violation_paths(ring, doc), "req/filters/0/attribute"));

    doc = request("comparative_benchmark");
    CHECK(contains(violation_paths(ring, doc), "req/benchmark_value"));
    doc["benchmark_value"] = "high";
    CHECK(contains(violation_paths(ring, doc), "req/benchmark_value"));

    doc = request("time_over_time");
    auto paths = violation_paths(ring, doc);
    CHECK(contains(paths, "req/time_attribute"));
    CHECK(contains(paths, "req/start_time"));
    CHECK(contains(paths, "req/end_time"));
  }
  SUBCASE("all violations are reported together") {
    auto doc = request();
    doc["metric"] = "state";
    doc["filters"][0]["op"] = "like";
    CHECK(violation_paths(ring, doc).size() == 2);
  }
  SUBCASE("malformed documents are parse errors") {
    auto doc = request();
    doc.erase("target");
    CHECK_THROWS_AS(parse_request(ring, doc), Error);
    try {
      parse_request(ring, doc);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
    }
  }
}

TEST_CASE("blueprint documents") {
  auto good = load_json(aag::testing::source_dir() / "blueprints" / "ranking.json");
  auto bp = parse_blueprint(good, "ranking");
  CHECK(bp.requirements.size() == 7);
  CHECK(bp.requirements[0].bindings.at("filter").filters == std::vector<std::string>{"instance", "cohort"});
  CHECK(bp.requirements[3].bindings.at("k").kind == SlotRule::Constant);

  auto bad = good;
  bad["requirements"][0]["bindings"]["key"] = "target_name";
  CHECK_THROWS_AS(parse_blueprint(bad, "x"), Error);
  bad = good;
  bad["requirements"][0]["bindings"]["filter"] = Json::array({"everything"});
  CHECK_THROWS_AS(parse_blueprint(bad, "x"), Error);
  bad = good;
  bad["requirements"][1]["id"] = "target_value";
  CHECK_THROWS_AS(parse_blueprint(bad, "x"), Error);
  bad = good;
  bad["prompt_template"] = "no facts here";
  CHECK_THROWS_AS(parse_blueprint(bad, "x"), Error);
}

TEST_CASE("instantiation") {
  Fixture f;
  for (const auto& [name, n] : std::vector<std::pair<std::string, std::size_t>>{
           {"ranking_ca_2020", 7}, {"benchmark_tx_2020", 6}, {"change_ca", 9}}) {
    CAPTURE(name);
    auto req = f.load(name);
    auto plans = instantiate(f.lib.blueprint(req.report_type), f.ring, f.lib, req);
    CHECK(plans.size() == n);
    for (const auto& p : plans) CHECK_NOTHROW(typecheck_plan(f.ring, p.plan));
  }

  SUBCASE("conditions follow the filters each requirement uses") {
    auto plans = instantiate(f.lib.blueprint(ReportType::TimeOverTime), f.ring, f.lib, f.load("change_ca"));
    CHECK(plans[0].inputs.text.at("conditions") == " (where year is 2010)");
    CHECK(plans[2].inputs.text.at("conditions") == " (from year 2010 to year 2020)");
    CHECK(plans[0].inputs.text.at("target") == "California");
    CHECK(plans[0].inputs.text.at("entity_plural") == "states");
  }
  SUBCASE("no cohort filter means no condition text") {
    auto doc = request();
    doc.erase("filters");
    auto req = parse_request(f.ring, doc);
    for (const auto& p : instantiate(f.lib.blueprint(ReportType::Ranking), f.ring, f.lib, req)) {
      CHECK(p.inputs.text.at("conditions").empty());
    }
  }
  SUBCASE("ranges read as half-open intervals") {
    auto doc = request("time_over_time");
    doc.erase("filters");
    doc["time_attribute"] = "year";
    doc["start_time"] = Json{{"from", 2000}, {"to", 2015}};
    doc["end_time"] = Json{{"from", 2015}, {"to", 2030}};
    auto req = parse_request(f.ring, doc);
    auto plans = instantiate(f.lib.blueprint(ReportType::TimeOverTime), f.ring, f.lib, req);
    CHECK(plans[0].inputs.text.at("conditions") == " (where year is at least 2000 and less than 2015)");
    auto results = run_report(f.ring, f.lib, req);
    CHECK(results[0].statement.text == "The average wildfire size for California was 1200.50 acres"
                                       " (where year is at least 2000 and less than 2015).");
  }
}

TEST_CASE("prompts") {
  Fixture f;
  auto req = f.load("ranking_ca_2020");
  const auto& bp = f.lib.blueprint(ReportType::Ranking);
  std::vector<std::string> facts = {"Fact one.", "Fact two."};
  auto p = build_prompt(bp, f.ring, req, facts, FactMode::Statements);
  CHECK(p.user == "Fact one.\nFact two.\n");
  CHECK(p.system.find("California") != std::string::npos);
  CHECK(p.system.find("Use only the facts provided.") != std::string::npos);
  CHECK(p.text() == p.system + p.user);
  CHECK(p.system.find('{') == std::string::npos);

  CHECK(facts_block({"a", "b"}, FactMode::Tables) == "a\n\nb\n");
  try {
    build_prompt(bp, f.ring, req, {}, FactMode::Statements);
    FAIL("expected EmptyFacts");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyFacts);
  }
  CHECK(report_description(f.lib.blueprint(ReportType::ComparativeBenchmark), f.ring, f.load("benchmark_tx_2020"))
            .find("benchmark of 1000") != std::string::npos);
}

TEST_CASE("pipeline") {
  Fixture f;
  auto req = f.load("benchmark_tx_2020");
  auto serial = run_report(f.ring, f.lib, req, 1);
  REQUIRE(serial.size() == 6);
  CHECK(serial[0].statement.text == "The average wildfire size for Texas was 355.38 acres (where year is 2020).");
  CHECK(serial[0].statement.source_plan == "target_value");

  SUBCASE("worker count does not change anything") {
    for (unsigned w : {2u, 4u, 16u}) {
      auto par = run_report(f.ring, f.lib, req, w);
      REQUIRE(par.size() == serial.size());
      for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].statement.text == serial[i].statement.text);
        CHECK(par[i].table == serial[i].table);
      }
    }
  }
  SUBCASE("statement values trace back to result cells") {
    for (const auto& r : serial) {
      for (const auto& v : r.statement.values) {
        bool found = false;
        for (const auto& in : r.plan.inputs.values) found = found || in.value == v.value;
        for (const auto& row : r.result.rows) {
          for (const auto& cell : row) found = found || cell == v.value;
        }
        CHECK(found);
      }
    }
  }
  SUBCASE("database failures name the requirement") {
    auto broken = f.ring;
    broken.db = "sqlite:///nonexistent/aag.db";
    try {
      run_report(broken, f.lib, req);
      FAIL("expected DbError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DbError);
      CHECK(e.where().rfind("target_value", 0) == 0);
    }
  }
  SUBCASE("a zero start value yields the undefined-change sentence") {
    auto doc = request("time_over_time");
    doc.erase("filters");
    doc["metric"] = "count size";
    doc["time_attribute"] = "year";
    doc["start_time"] = 1999;
    doc["end_time"] = 2020;
    auto results = run_report(f.ring, f.lib, parse_request(f.ring, doc));
    CHECK(results[2].statement.text.find("is undefined") != std::string::npos);
  }
}
