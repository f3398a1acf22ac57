#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "aag/plan.hpp"
#include "aag/ring.hpp"

namespace aag {

enum class SlotKind { AccessPlan, Filter, Literal };

struct SlotDef {
  std::string name;
  SlotKind kind = SlotKind::Literal;
  TypeSet types;          // empty: any
  bool optional = false;  // filter slots only; an unbound optional slot drops its argument
};

struct PlanTemplate {
  std::string id;
  std::string description;
  SqrPlan plan;  // args may hold Slots
  std::vector<SlotDef> slots;
  std::string statement_template;

  const SlotDef* find_slot(const std::string& name) const;
};

struct PlanBinding {
  SqrPlan plan;
  TypeSet output_types;
};

using SlotBinding = std::variant<Literal, PlanBinding>;
using SlotBindings = std::map<std::string, SlotBinding>;

// Type-checks `plan` against the ring and records its terminal types.
PlanBinding bind_plan(const Ring& ring, SqrPlan plan);

SqrPlan fill_template(const PlanTemplate& tmpl, const SlotBindings& bindings);
// fill_template followed by a type check of the filled plan.
SqrPlan fill_and_check(const Ring& ring, const PlanTemplate& tmpl, const SlotBindings& bindings);

PlanTemplate parse_template(const Json& doc, const std::string& origin);
std::vector<PlanTemplate> load_templates(const std::filesystem::path& path);
Json template_to_json(const PlanTemplate& t);

}  // namespace aag
