#include "aag/typecheck.hpp"

#include <functional>
#include <set>

namespace aag {

const StepInfo& PlanTypes::info(const std::string& label) const {
  auto it = infos_.find(label);
  if (it == infos_.end()) throw Error(ErrorCode::TypeError, "step was not type-checked", label);
  return it->second;
}

std::map<std::string, TypeSet> PlanTypes::type_map() const {
  std::map<std::string, TypeSet> out;
  for (const auto& [k, v] : infos_) out[k] = v.types;
  return out;
}

TypeSet literal_types(const Literal& l) {
  if (l.datetime) return {AttributeType::Datetime};
  if (std::holds_alternative<std::string>(l.value)) return {AttributeType::String};
  if (std::holds_alternative<bool>(l.value)) return {AttributeType::Categorical};
  if (is_numeric(l.value)) return {AttributeType::Arithmetic, AttributeType::Metric};
  return {};
}

std::vector<std::string> topological_order(const SqrPlan& plan) {
  std::map<std::string, int> state;  // 1 = visiting, 2 = done
  std::vector<std::string> order;
  std::function<void(const std::string&)> visit = [&](const std::string& l) {
    auto& s = state[l];
    if (s == 2) return;
    if (s == 1) throw Error(ErrorCode::CycleError, "reference cycle through |" + l + "|", l);
    s = 1;
    for (const auto& r : step_references(plan.step(l))) visit(r);
    state[l] = 2;
    order.push_back(l);
  };
  for (const auto& s : plan.steps()) visit(s.label);
  return order;
}

const SqrStep& collect_of(const SqrPlan& plan, const SqrStep& ret) {
  if (ret.args.empty() || !is_ref(ret.args.front())) {
    throw Error(ErrorCode::TypeError, "return needs a collect input", ret.label);
  }
  const auto& c = plan.step(ref_label(ret.args.front()));
  if (c.op != "collect") throw Error(ErrorCode::UnsupportedPattern, "return input must be a collect step", ret.label);
  return c;
}

namespace {

const char* comparison_word(const std::string& op) {
  if (op == "exact") return " equals ";
  if (op == "greater_than") return " greater than ";
  if (op == "greater_than_equal") return " at least ";
  if (op == "less_than") return " less than ";
  if (op == "less_than_equal") return " at most ";
  if (op == "contains") return " contains ";
  if (op == "and") return " and ";
  if (op == "or") return " or ";
  if (op == "add") return " plus ";
  if (op == "subtract") return " minus ";
  if (op == "multiply") return " times ";
  if (op == "divide") return " divided by ";
  return nullptr;
}

// Builds a display string for a value step from its inputs' strings.
std::string compose_name(const SqrStep& s, const std::vector<std::string>& in, const Registry& reg) {
  const auto* sig = reg.find(s.op);
  if (s.op == "get_one" && !in.empty()) return in.front();
  if (s.op == "row_number") return "row number";
  if (sig && sig->op_type == OperationType::Aggregation) {
    return in.empty() ? sig->nicename : sig->nicename + " " + in.front();
  }
  if (const char* w = comparison_word(s.op)) {
    std::string out;
    for (std::size_t i = 0; i < in.size(); ++i) out += (i ? w : "") + in[i];
    return out;
  }
  if (s.op == "not" && !in.empty()) return "not " + in.front();
  if (s.op == "duration" && in.size() == 2) return "duration from " + in[0] + " to " + in[1];
  if (s.op == "percent_change" && !in.empty()) return "percent change in " + in.back();
  if (sig && !in.empty()) return sig->nicename + " of " + in.front();
  return s.op;
}

bool is_value_arg(const SqrPlan& plan, const Arg& a) {
  if (as_literal(a)) return true;
  if (!is_ref(a)) return false;
  const auto& op = plan.step(ref_label(a)).op;
  return op != "groupby" && op != "sort" && op != "limit" && op != "collect" && op != "return" &&
         op != "retrieve_entity";
}

std::vector<std::string> dedupe(std::vector<std::string> names) {
  std::map<std::string, int> seen;
  for (auto& n : names) {
    int k = ++seen[n];
    if (k > 1) n += " " + std::to_string(k);
  }
  return names;
}

class Checker {
 public:
  Checker(const Ring& ring, const SqrPlan& plan, const Registry& reg) : ring_(ring), plan_(plan), reg_(reg) {}

  PlanTypes run() {
    for (const auto& l : topological_order(plan_)) check(plan_.step(l));
    return std::move(out_);
  }

 private:
  TypeSet arg_types(const Arg& a) const {
    if (auto* r = std::get_if<StepRef>(&a)) return out_.types(r->label);
    if (auto* l = std::get_if<Literal>(&a)) return literal_types(*l);
    throw Error(ErrorCode::UnboundSlot, "unfilled slot {" + std::get<Slot>(a).name + "}");
  }

  ColumnMeta arg_column(const Arg& a) const {
    if (auto* r = std::get_if<StepRef>(&a)) return out_.info(r->label).column;
    const auto& l = std::get<Literal>(a);
    return {sql_text(l.value), sql_text(l.value), literal_types(l), std::nullopt};
  }

  static const std::string& literal_string(const SqrStep& s, std::size_t i) {
    const auto* l = i < s.args.size() ? as_literal(s.args[i]) : nullptr;
    if (!l || !std::holds_alternative<std::string>(l->value)) {
      throw Error(ErrorCode::TypeError, s.op + " argument " + std::to_string(i + 1) + " must be a string literal",
                  s.label);
    }
    return std::get<std::string>(l->value);
  }

  void check(const SqrStep& s) {
    const auto* sig = reg_.find(s.op);
    if (!sig) throw Error(ErrorCode::TypeError, "unknown operation '" + s.op + "'", s.label);
    std::vector<TypeSet> in;
    for (const auto& a : s.args) in.push_back(arg_types(a));
    match_arguments(*sig, in, s.label);

    StepInfo info;
    info.types = sig->output;
    if (s.op == "retrieve_entity") {
      info.entity = literal_string(s, 0);
      if (!ring_.find_entity(info.entity)) {
        throw Error(ErrorCode::UnknownEntity, "no entity '" + info.entity + "' in ring " + ring_.name, s.label);
      }
    } else if (s.op == "retrieve_attribute") {
      const auto& source = plan_.step(ref_label(s.args[0]));
      const auto& name = literal_string(s, 1);
      if (source.op == "retrieve_entity") {
        const auto& e = ring_.entity(out_.info(source.label).entity);
        const auto* a = e.find_attribute(name);
        if (!a) throw Error(ErrorCode::UnknownAttribute, "entity " + e.name + " has no attribute '" + name + "'", s.label);
        if (a->derived) {
          throw Error(ErrorCode::UnknownAttribute,
                      "derived attribute '" + name + "' must be used through its access plan", s.label);
        }
        info.types = a->types;
        info.column = {a->name, a->nicename, a->types, a->units};
      } else {
        const auto& schema = out_.info(source.label).schema;
        const ColumnMeta* found = nullptr;
        for (const auto& c : schema) {
          if (c.name == name) found = &c;
        }
        if (!found) {
          throw Error(ErrorCode::UnknownAttribute, "|" + source.label + "| has no column '" + name + "'", s.label);
        }
        info.types = found->types;
        info.column = *found;
        info.column.name = name;
      }
    } else if (s.op == "collect" || s.op == "return") {
      if (s.op == "collect") {
        for (const auto& a : s.args) info.schema.push_back(arg_column(a));
      } else {
        info.schema = out_.info(ref_label(s.args[0])).schema;
      }
      auto names = output_column_names(plan_, s.label);
      for (std::size_t i = 0; i < names.size(); ++i) info.schema[i].name = names[i];
    } else if (s.op == "sort") {
      const auto& dir = literal_string(s, s.args.size() - 1);
      if (dir != "asc" && dir != "desc") {
        throw Error(ErrorCode::TypeError, "sort direction must be \"asc\" or \"desc\"", s.label);
      }
    } else if (s.op == "limit") {
      const auto* l = as_literal(s.args[0]);
      if (l && !(std::holds_alternative<std::int64_t>(l->value) && std::get<std::int64_t>(l->value) > 0)) {
        throw Error(ErrorCode::TypeError, "limit must be a positive integer", s.label);
      }
    }

    if (sig->op_type != OperationType::Retrieval && s.op != "collect" && s.op != "return") {
      std::vector<ColumnMeta> cols;
      for (const auto& a : s.args) {
        if (is_value_arg(plan_, a)) cols.push_back(arg_column(a));
      }
      std::vector<std::string> nices;
      for (const auto& c : cols) nices.push_back(c.nicename);
      info.column.name = value_name(plan_, StepRef{s.label});
      info.column.nicename = s.op == "row_number" ? "rank" : compose_name(s, nices, reg_);
      info.column.types = info.types;
      info.column.units = units_after(s.op, cols.empty() ? std::nullopt : cols.front().units);
      if (s.op == "percent_change" || s.op == "duration") info.column.units = units_after(s.op, std::nullopt);
    }
    if (sig->op_type == OperationType::Retrieval && s.op == "retrieve_attribute") info.column.types = info.types;
    out_.set(s.label, std::move(info));
  }

  const Ring& ring_;
  const SqrPlan& plan_;
  const Registry& reg_;
  PlanTypes out_;
};

}  // namespace

PlanTypes typecheck_plan(const Ring& ring, const SqrPlan& plan, const Registry& registry) {
  check_plan_structure(plan, false, "plan");
  return Checker(ring, plan, registry).run();
}

std::string value_name(const SqrPlan& plan, const Arg& arg) {
  if (auto* l = std::get_if<Literal>(&arg)) return sql_text(l->value);
  if (!is_ref(arg)) return "";
  const auto& s = plan.step(ref_label(arg));
  if (s.op == "retrieve_attribute") {
    const auto* l = s.args.size() > 1 ? as_literal(s.args[1]) : nullptr;
    return l ? sql_text(l->value) : "";
  }
  std::vector<std::string> in;
  for (const auto& a : s.args) {
    if (is_value_arg(plan, a)) in.push_back(value_name(plan, a));
  }
  return compose_name(s, in, Registry::builtin());
}

std::vector<std::string> output_column_names(const SqrPlan& plan, const std::string& label) {
  const auto* s = &plan.step(label);
  if (s->op == "return") s = &collect_of(plan, *s);
  if (s->op != "collect") throw Error(ErrorCode::TypeError, "not a collect or return step", label);
  std::vector<std::string> names;
  for (const auto& a : s->args) names.push_back(value_name(plan, a));
  return dedupe(std::move(names));
}

}  // namespace aag
