#include "coverage.hpp"

#include <set>

namespace aag::testing {

std::filesystem::path source_dir() { return AAG_SOURCE_DIR; }
std::filesystem::path wildfire_dir() { return source_dir() / "fixtures" / "wildfire"; }

Ring wildfire_ring(const std::filesystem::path& db) {
  auto ring = derive_attributes(load_ring(wildfire_dir() / "ring.json"));
  if (!db.empty()) ring.db = "sqlite://" + std::filesystem::absolute(db).string();
  return ring;
}

namespace {

SlotRule source(const std::string& name, SlotRule::Kind kind = SlotRule::Source) {
  SlotRule r;
  r.kind = kind;
  r.name = name;
  return r;
}

SlotRule filter(std::vector<std::string> parts) {
  SlotRule r;
  r.kind = SlotRule::Filter;
  r.filters = std::move(parts);
  return r;
}

}  // namespace

Blueprint coverage_blueprint(const Library& lib) {
  Blueprint bp;
  bp.description = "coverage";
  bp.prompt_template = "{facts}";
  for (const auto& [id, tmpl] : lib.plans) {
    InfoRequirement r{id, id, id, {}};
    for (const auto& slot : tmpl.slots) {
      const auto& n = slot.name;
      if (n == "key") {
        r.bindings[n] = source("target_key", SlotRule::AccessPlan);
      } else if (n == "metric") {
        r.bindings[n] = source("metric", SlotRule::AccessPlan);
      } else if (n == "key_column" || n == "metric_column" || n == "target" || n == "benchmark") {
        r.bindings[n] = source(n);
      } else if (n == "k") {
        SlotRule k;
        k.kind = SlotRule::Constant;
        k.constant = make_literal(std::int64_t{3});
        r.bindings[n] = k;
      } else if (n == "filter" || n == "instance") {
        r.bindings[n] = filter({"instance", "cohort"});
      } else if (n == "cohort") {
        r.bindings[n] = filter({"cohort"});
      } else if (n == "instance_start" || n == "instance_end") {
        r.bindings[n] = filter({"instance", "cohort", n == "instance_start" ? "start" : "end"});
      } else if (n == "cohort_start" || n == "cohort_end") {
        r.bindings[n] = filter({"cohort", n == "cohort_start" ? "start" : "end"});
      } else {
        throw Error(ErrorCode::UnboundSlot, "coverage has no rule for slot " + n, id);
      }
    }
    bp.requirements.push_back(std::move(r));
  }
  return bp;
}

std::vector<ReportRequest> coverage_requests(const Ring& ring) {
  struct Key {
    std::string entity;
    Literal target;
  };
  const std::vector<Key> keys = {{"State", make_literal(std::string("California"))},
                                 {"Wildfire", make_literal(std::int64_t{3})}};
  std::vector<ReportRequest> out;
  for (const auto& k : keys) {
    for (const auto& e : ring.entities) {
      for (const auto& a : e.attributes) {
        if (!a.types.contains(AttributeType::Metric)) continue;
        // A base metric on another entity has one value per related row, not per key.
        if (!a.derived && e.name != k.entity) continue;
        for (int variant = 0; variant < 2; ++variant) {
          ReportRequest r;
          r.report_type = ReportType::Ranking;
          r.target_entity = k.entity;
          r.target = k.target;
          r.metric = {e.name, a.name};
          r.benchmark = make_literal(std::int64_t{1000});
          r.time_attribute = AttributeRef{"Wildfire", "year"};
          if (variant == 0) {
            r.start_time = TimeValue{make_literal(std::int64_t{2010}), std::nullopt};
            r.end_time = TimeValue{make_literal(std::int64_t{2020}), std::nullopt};
          } else {
            r.filters.push_back({{"Wildfire", "size"}, "greater_than", make_literal(100.0)});
            r.start_time = TimeValue{make_literal(std::int64_t{2000}), make_literal(std::int64_t{2015})};
            r.end_time = TimeValue{make_literal(std::int64_t{2015}), make_literal(std::int64_t{2030})};
          }
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

std::vector<CoverageCase> coverage_cases(const Ring& ring, const Library& lib) {
  auto bp = coverage_blueprint(lib);
  std::vector<CoverageCase> out;
  for (const auto& req : coverage_requests(ring)) {
    const auto& id = ring.entity(req.target_entity).identifier()->name;
    std::string suffix = " key=" + req.target_entity + "." + id + " metric=" + req.metric.attribute +
                         " variant=" + (req.filters.empty() ? "0" : "1");
    for (auto& p : instantiate(bp, ring, lib, req)) out.push_back({p.plan_template + suffix, std::move(p.plan)});
  }
  return out;
}

Comparison compare_with_oracle(const Ring& ring, const MemoryDataset& data, const Database& db, const SqrPlan& plan) {
  Comparison c;
  try {
    auto q = compile(ring, plan);
    c.compiled = run_query(db, q);
    c.expected = oracle_eval(ring, data, plan);
    c.ok = results_match(c.compiled, c.expected, q.ordered, 1e-9, &c.detail);
  } catch (const Error& e) {
    c.detail = e.what();
  }
  return c;
}

}  // namespace aag::testing
