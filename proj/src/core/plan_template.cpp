#include "aag/plan_template.hpp"

#include <set>

#include "aag/compose.hpp"
#include "aag/typecheck.hpp"

namespace aag {

const SlotDef* PlanTemplate::find_slot(const std::string& name) const {
  for (const auto& s : slots) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

PlanBinding bind_plan(const Ring& ring, SqrPlan plan) {
  auto types = typecheck_plan(ring, plan);
  TypeSet out = types.types(plan.result());
  return {std::move(plan), out};
}

namespace {

std::string kind_name(SlotKind k) {
  switch (k) {
    case SlotKind::AccessPlan: return "access_plan";
    case SlotKind::Filter: return "filter";
    case SlotKind::Literal: return "literal";
  }
  return "";
}

void check_binding(const SlotDef& slot, const SlotBinding& b) {
  auto mismatch = [&](const std::string& why) {
    throw Error(ErrorCode::SlotKindMismatch, why, "{" + slot.name + "}");
  };
  if (slot.kind == SlotKind::Literal) {
    const auto* l = std::get_if<Literal>(&b);
    if (!l) mismatch("literal slot bound to a plan");
    if (!slot.types.empty() && !accepts(slot.types, literal_types(*l))) {
      mismatch("expected " + slot.types.str() + ", found " + literal_types(*l).str());
    }
    return;
  }
  const auto* p = std::get_if<PlanBinding>(&b);
  if (!p) mismatch(kind_name(slot.kind) + " slot bound to a literal");
  if (slot.kind == SlotKind::Filter && !p->output_types.contains(AttributeType::Filter)) {
    mismatch("filter slot bound to a plan producing " + p->output_types.str());
  }
  if (!slot.types.empty() && !accepts(slot.types, p->output_types)) {
    mismatch("expected " + slot.types.str() + ", found " + p->output_types.str());
  }
}

}  // namespace

SqrPlan fill_template(const PlanTemplate& tmpl, const SlotBindings& bindings) {
  for (const auto& [name, b] : bindings) {
    if (!tmpl.find_slot(name)) throw Error(ErrorCode::WiringError, "template has no slot {" + name + "}", tmpl.id);
  }
  std::set<std::string> dropped;
  for (const auto& slot : tmpl.slots) {
    auto it = bindings.find(slot.name);
    if (it == bindings.end()) {
      if (slot.optional) {
        dropped.insert(slot.name);
        continue;
      }
      throw Error(ErrorCode::UnboundSlot, "no binding for {" + slot.name + "}", tmpl.id);
    }
    check_binding(slot, it->second);
  }

  SqrPlan body;
  for (const auto& s : tmpl.plan.steps()) {
    SqrStep step{s.label, s.op, {}};
    for (const auto& a : s.args) {
      if (auto* slot = std::get_if<Slot>(&a)) {
        if (dropped.count(slot->name)) continue;
        if (!slot->reference) {
          step.args.push_back(std::get<Literal>(bindings.at(slot->name)));
          continue;
        }
      }
      step.args.push_back(a);
    }
    body.add_step(std::move(step));
  }
  body.set_result(tmpl.plan.result());

  std::vector<SqrPlan> parts;
  std::map<std::string, std::size_t> wiring;
  for (const auto& slot : tmpl.slots) {
    if (slot.kind == SlotKind::Literal || dropped.count(slot.name)) continue;
    wiring[slot.name] = parts.size();
    parts.push_back(std::get<PlanBinding>(bindings.at(slot.name)).plan);
  }
  try {
    return compose_plans(body, parts, wiring);
  } catch (const Error& e) {
    rethrow_with_context(e, tmpl.id);
  }
}

SqrPlan fill_and_check(const Ring& ring, const PlanTemplate& tmpl, const SlotBindings& bindings) {
  auto plan = fill_template(tmpl, bindings);
  try {
    typecheck_plan(ring, plan);
  } catch (const Error& e) {
    rethrow_with_context(e, tmpl.id);
  }
  return plan;
}

PlanTemplate parse_template(const Json& doc, const std::string& origin) {
  PlanTemplate t;
  t.id = require_string(doc, "id", origin);
  const std::string path = origin + "/" + t.id;
  if (doc.contains("description")) t.description = require_string(doc, "description", path);
  t.statement_template = doc.contains("statement") ? require_string(doc, "statement", path) : t.id;
  if (doc.contains("slots")) {
    require_array(doc["slots"], path + "/slots");
    for (const auto& s : doc["slots"]) {
      SlotDef d;
      d.name = require_string(s, "name", path + "/slots");
      auto kind = require_string(s, "kind", path + "/slots/" + d.name);
      if (kind == "access_plan") d.kind = SlotKind::AccessPlan;
      else if (kind == "filter") d.kind = SlotKind::Filter;
      else if (kind == "literal") d.kind = SlotKind::Literal;
      else throw Error(ErrorCode::ParseError, "unknown slot kind '" + kind + "'", path + "/slots/" + d.name);
      if (s.contains("types")) {
        for (const auto& n : s["types"]) {
          auto parsed = n.is_string() ? parse_attribute_type(n.get<std::string>()) : std::nullopt;
          if (!parsed) throw Error(ErrorCode::ParseError, "unknown type " + n.dump(), path + "/slots/" + d.name);
          d.types.insert(*parsed);
        }
      }
      d.optional = s.value("optional", false);
      if (d.optional && d.kind != SlotKind::Filter) {
        throw Error(ErrorCode::ParseError, "only filter slots may be optional", path + "/slots/" + d.name);
      }
      if (t.find_slot(d.name)) throw Error(ErrorCode::ParseError, "duplicate slot", path + "/slots/" + d.name);
      t.slots.push_back(std::move(d));
    }
  }
  t.plan = parse_plan_body(doc, true, path);

  std::set<std::string> referenced;
  for (const auto& s : t.plan.steps()) {
    for (const auto& a : s.args) {
      const auto* slot = std::get_if<Slot>(&a);
      if (!slot) continue;
      const auto* def = t.find_slot(slot->name);
      if (!def) throw Error(ErrorCode::ParseError, "undeclared slot {" + slot->name + "}", path + "/steps/" + s.label);
      if (slot->reference == (def->kind == SlotKind::Literal)) {
        throw Error(ErrorCode::ParseError, "slot {" + slot->name + "} used with the wrong syntax for its kind",
                    path + "/steps/" + s.label);
      }
      referenced.insert(slot->name);
    }
  }
  for (const auto& s : t.slots) {
    if (!referenced.count(s.name)) throw Error(ErrorCode::ParseError, "slot {" + s.name + "} is never used", path);
  }
  return t;
}

std::vector<PlanTemplate> load_templates(const std::filesystem::path& path) {
  auto doc = load_json(path);
  const std::string origin = path.filename().string();
  check_format(doc, "sqr_template_v1", origin);
  const auto& list = require_field(doc, "templates", origin);
  require_array(list, origin + "/templates");
  std::vector<PlanTemplate> out;
  std::set<std::string> ids;
  for (const auto& t : list) {
    out.push_back(parse_template(t, origin));
    if (!ids.insert(out.back().id).second) throw Error(ErrorCode::ParseError, "duplicate template id", out.back().id);
  }
  return out;
}

Json template_to_json(const PlanTemplate& t) {
  Json slots = Json::array();
  for (const auto& s : t.slots) {
    Json j{{"name", s.name}, {"kind", kind_name(s.kind)}};
    if (!s.types.empty()) {
      Json types = Json::array();
      for (auto m : s.types.members()) types.push_back(std::string(to_string(m)));
      j["types"] = types;
    }
    if (s.optional) j["optional"] = true;
    slots.push_back(j);
  }
  auto body = plan_to_json(t.plan);
  Json out{{"id", t.id}};
  if (!t.description.empty()) out["description"] = t.description;
  out["slots"] = slots;
  out["steps"] = body["steps"];
  out["result"] = body["result"];
  out["statement"] = t.statement_template;
  return out;
}

}  // namespace aag
