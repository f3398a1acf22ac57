#include <algorithm>
#include <set>

#include "aag/compose.hpp"
#include "aag/typecheck.hpp"
#include "internal.hpp"

namespace aag {

namespace {

const std::set<std::string> kAccessNames = {"metric", "target_key"};
const std::set<std::string> kFilterNames = {"instance", "cohort", "start", "end"};
const std::set<std::string> kSourceNames = {"target", "metric_column", "key_column", "benchmark", "start_time",
                                            "end_time"};

ReportType report_type_of(const std::string& s, const std::string& path) {
  for (auto t : {ReportType::Ranking, ReportType::TimeOverTime, ReportType::ComparativeBenchmark}) {
    if (to_string(t) == s) return t;
  }
  throw Error(ErrorCode::ParseError, "unknown report type '" + s + "'", path);
}

SlotRule parse_rule(const Json& j, const std::string& path) {
  SlotRule r;
  if (j.is_array()) {
    r.kind = SlotRule::Filter;
    for (const auto& f : j) {
      if (!f.is_string() || !kFilterNames.count(f.get<std::string>())) {
        throw Error(ErrorCode::ParseError, "filter parts are instance, cohort, start or end", path);
      }
      r.filters.push_back(f.get<std::string>());
    }
  } else if (j.is_string()) {
    r.name = j.get<std::string>();
    if (kAccessNames.count(r.name)) {
      r.kind = SlotRule::AccessPlan;
    } else if (kSourceNames.count(r.name)) {
      r.kind = SlotRule::Source;
    } else {
      throw Error(ErrorCode::ParseError, "unknown binding source '" + r.name + "'", path);
    }
  } else if (j.is_number() || j.is_boolean() || (j.is_object() && j.contains("literal"))) {
    r.kind = SlotRule::Constant;
    const auto* l = as_literal(parse_arg(j, false, path));
    if (!l) throw Error(ErrorCode::ParseError, "expected a literal", path);
    r.constant = *l;
  } else {
    throw Error(ErrorCode::ParseError, "unsupported binding", path);
  }
  return r;
}

std::string label_for(std::size_t i) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('A' + i % 26));
    i = i / 26;
  } while (i-- > 0);
  return s;
}

struct Condition {
  AttributeRef attr;
  std::string op;
  Literal value;
};

// Conjunction of comparisons over base attributes; nullopt when empty.
std::optional<SqrPlan> filter_plan(const Ring& ring, const std::vector<Condition>& conds) {
  if (conds.empty()) return std::nullopt;
  SqrPlan plan;
  std::size_t n = 0;
  std::vector<Arg> parts;
  for (const auto& c : conds) {
    auto ap = build_access_plan(ring, c.attr.entity, c.attr.attribute);
    std::map<std::string, std::string> rename;
    for (const auto& s : ap.plan.steps()) {
      SqrStep copy = s;
      copy.label = label_for(n++);
      rename[s.label] = copy.label;
      for (auto& a : copy.args) {
        if (is_ref(a)) a = StepRef{rename.at(ref_label(a))};
      }
      plan.add_step(std::move(copy));
    }
    auto cmp = label_for(n++);
    plan.add_step({cmp, c.op, {StepRef{rename.at(ap.plan.result())}, c.value}});
    parts.push_back(StepRef{cmp});
  }
  if (parts.size() == 1) {
    plan.set_result(ref_label(parts.front()));
  } else {
    auto all = label_for(n++);
    plan.add_step({all, "and", parts});
    plan.set_result(all);
  }
  return plan;
}

std::vector<Condition> conditions_for(const Ring& ring, const ReportRequest& req,
                                      const std::vector<std::string>& names) {
  std::vector<Condition> out;
  for (const auto& name : names) {
    if (name == "instance") {
      const auto& e = ring.entity(req.target_entity);
      out.push_back({{e.name, e.identifier()->name}, "exact", req.target});
    } else if (name == "cohort") {
      for (const auto& f : req.filters) out.push_back({f.attribute, f.op, f.value});
    } else {
      const auto& t = name == "start" ? req.start_time : req.end_time;
      if (!t) throw Error(ErrorCode::UnboundSlot, "the request has no " + name + "_time", name);
      if (t->is_range()) {
        out.push_back({*req.time_attribute, "greater_than_equal", t->at});
        out.push_back({*req.time_attribute, "less_than", *t->to});
      } else {
        out.push_back({*req.time_attribute, "exact", t->at});
      }
    }
  }
  return out;
}

}  // namespace

Blueprint parse_blueprint(const Json& doc, const std::string& origin) {
  require_object(doc, origin);
  check_format(doc, "blueprint_v1", origin);
  Blueprint bp;
  bp.report_type = report_type_of(require_string(doc, "report_type", origin), origin + "/report_type");
  bp.description = require_string(doc, "description", origin);
  bp.prompt_template = require_string(doc, "prompt_template", origin);
  if (bp.prompt_template.find("{facts}") == std::string::npos) {
    throw Error(ErrorCode::ParseError, "prompt_template has no {facts} placeholder", origin + "/prompt_template");
  }
  const auto& reqs = require_field(doc, "requirements", origin);
  require_array(reqs, origin + "/requirements");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    auto path = origin + "/requirements/" + std::to_string(i);
    const auto& r = reqs[i];
    require_object(r, path);
    InfoRequirement ir;
    ir.id = require_string(r, "id", path);
    if (!ids.insert(ir.id).second) throw Error(ErrorCode::ParseError, "duplicate requirement id", path + "/id");
    ir.plan_template = require_string(r, "plan_template", path);
    ir.statement = r.contains("statement") ? require_string(r, "statement", path) : ir.plan_template;
    const auto& b = require_field(r, "bindings", path);
    require_object(b, path + "/bindings");
    for (auto it = b.begin(); it != b.end(); ++it) {
      ir.bindings[it.key()] = parse_rule(it.value(), path + "/bindings/" + it.key());
    }
    bp.requirements.push_back(std::move(ir));
  }
  if (bp.requirements.empty()) throw Error(ErrorCode::ParseError, "no requirements", origin + "/requirements");
  return bp;
}

Blueprint load_blueprint(const std::filesystem::path& path) { return parse_blueprint(load_json(path), path.string()); }

const Blueprint& Library::blueprint(ReportType t) const {
  auto it = blueprints.find(t);
  if (it == blueprints.end()) {
    throw Error(ErrorCode::ValidationError, "no blueprint for report type " + std::string(to_string(t)));
  }
  return it->second;
}

Library load_library(const std::filesystem::path& dir) {
  Library lib;
  for (auto& t : load_templates(dir / "templates" / "plan_templates_v1.json")) lib.plans[t.id] = std::move(t);
  lib.statements = load_statement_templates(dir / "templates" / "statements_v1.json");

  std::vector<std::filesystem::path> files;
  auto bdir = dir / "blueprints";
  if (!std::filesystem::is_directory(bdir)) throw Error(ErrorCode::IoError, "missing directory", bdir.string());
  for (const auto& e : std::filesystem::directory_iterator(bdir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto bp = load_blueprint(f);
    for (const auto& r : bp.requirements) {
      auto where = f.string() + "/" + r.id;
      auto pt = lib.plans.find(r.plan_template);
      if (pt == lib.plans.end()) throw Error(ErrorCode::ParseError, "unknown plan template " + r.plan_template, where);
      if (!lib.statements.count(r.statement)) {
        throw Error(ErrorCode::ParseError, "unknown statement template " + r.statement, where);
      }
      for (const auto& [slot, rule] : r.bindings) {
        if (!pt->second.find_slot(slot)) throw Error(ErrorCode::UnboundSlot, "template has no slot " + slot, where);
      }
    }
    if (!lib.blueprints.emplace(bp.report_type, std::move(bp)).second) {
      throw Error(ErrorCode::ParseError, "second blueprint for one report type", f.string());
    }
  }
  return lib;
}

std::vector<InstantiatedPlan> instantiate(const Blueprint& bp, const Ring& ring, const Library& lib,
                                          const ReportRequest& req) {
  const auto& target = ring.entity(req.target_entity);
  auto key = build_access_plan(ring, target.name, target.identifier()->name);
  auto metric = build_access_plan(ring, req.metric.entity, req.metric.attribute);
  auto key_column = value_name(key.plan, StepRef{key.plan.result()});
  auto metric_column = value_name(metric.plan, StepRef{metric.plan.result()});

  std::vector<InstantiatedPlan> out;
  for (const auto& r : bp.requirements) {
    try {
      const auto& tmpl = lib.plans.at(r.plan_template);
      SlotBindings bindings;
      std::vector<std::string> used;
      for (const auto& [slot, rule] : r.bindings) {
        switch (rule.kind) {
          case SlotRule::AccessPlan:
            bindings[slot] = bind_plan(ring, rule.name == "metric" ? metric.plan : key.plan);
            break;
          case SlotRule::Filter: {
            for (const auto& f : rule.filters) {
              if (std::find(used.begin(), used.end(), f) == used.end()) used.push_back(f);
            }
            if (auto fp = filter_plan(ring, conditions_for(ring, req, rule.filters))) {
              bindings[slot] = bind_plan(ring, std::move(*fp));
            }
            break;
          }
          case SlotRule::Source:
            if (rule.name == "target") {
              bindings[slot] = req.target;
            } else if (rule.name == "metric_column") {
              bindings[slot] = make_literal(metric_column);
            } else if (rule.name == "key_column") {
              bindings[slot] = make_literal(key_column);
            } else if (rule.name == "benchmark") {
              if (!req.benchmark) throw Error(ErrorCode::UnboundSlot, "the request has no benchmark_value", slot);
              bindings[slot] = *req.benchmark;
            } else {
              const auto& t = rule.name == "start_time" ? req.start_time : req.end_time;
              if (!t) throw Error(ErrorCode::UnboundSlot, "the request has no " + rule.name, slot);
              bindings[slot] = t->at;
            }
            break;
          case SlotRule::Constant:
            bindings[slot] = rule.constant;
            break;
        }
      }
      InstantiatedPlan ip{r.id, r.plan_template, r.statement, fill_and_check(ring, tmpl, bindings), {}};
      // The instance filter names the target, which the statement already says.
      used.erase(std::remove(used.begin(), used.end(), "instance"), used.end());
      ip.inputs = detail::base_inputs(ring, req);
      ip.inputs.text["conditions"] = detail::conditions_text(ring, req, used, &ip.inputs.values);
      out.push_back(std::move(ip));
    } catch (const Error& e) {
      rethrow_with_context(e, r.id);
    }
  }
  return out;
}

}  // namespace aag
