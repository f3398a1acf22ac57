#include "aag/plan.hpp"

#include <regex>
#include <set>

#include "aag/error.hpp"

namespace aag {

void SqrPlan::add_step(SqrStep step) {
  if (index_.count(step.label)) throw Error(ErrorCode::ParseError, "duplicate step label", step.label);
  index_.emplace(step.label, steps_.size());
  steps_.push_back(std::move(step));
}

const SqrStep* SqrPlan::find(std::string_view label) const {
  auto it = index_.find(label);
  return it == index_.end() ? nullptr : &steps_[it->second];
}

const SqrStep& SqrPlan::step(std::string_view label) const {
  const auto* s = find(label);
  if (!s) throw Error(ErrorCode::ParseError, "no such step", std::string(label));
  return *s;
}

void SqrPlan::remove_step(std::string_view label) {
  std::erase_if(steps_, [&](const SqrStep& s) { return s.label == label; });
  reindex();
}

void SqrPlan::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < steps_.size(); ++i) index_.emplace(steps_[i].label, i);
}

bool is_valid_label(std::string_view label) {
  static const std::regex re("[A-Za-z0-9][A-Za-z0-9_]*");
  return std::regex_match(label.begin(), label.end(), re);
}

bool is_iso_datetime(std::string_view s) {
  static const std::regex re(
      R"(\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?)");
  return std::regex_match(s.begin(), s.end(), re);
}

Literal make_literal(Value v) {
  Literal l{std::move(v), false};
  if (auto* s = std::get_if<std::string>(&l.value)) l.datetime = is_iso_datetime(*s);
  return l;
}

bool is_ref(const Arg& a) { return std::holds_alternative<StepRef>(a); }

const std::string& ref_label(const Arg& a) { return std::get<StepRef>(a).label; }

const Literal* as_literal(const Arg& a) { return std::get_if<Literal>(&a); }

std::vector<std::string> step_references(const SqrStep& step) {
  std::vector<std::string> out;
  for (const auto& a : step.args) {
    if (auto* r = std::get_if<StepRef>(&a)) out.push_back(r->label);
  }
  return out;
}

void check_plan_structure(const SqrPlan& plan, bool allow_slots, const std::string& origin) {
  if (plan.empty()) throw Error(ErrorCode::ParseError, "plan must have at least one step", origin);
  for (const auto& s : plan.steps()) {
    for (const auto& a : s.args) {
      if (auto* r = std::get_if<StepRef>(&a)) {
        if (!plan.find(r->label)) {
          throw Error(ErrorCode::ParseError, "dangling reference |" + r->label + "|", origin + "/steps/" + s.label);
        }
      } else if (std::holds_alternative<Slot>(a) && !allow_slots) {
        throw Error(ErrorCode::ParseError, "slot placeholder outside a template", origin + "/steps/" + s.label);
      }
    }
  }
  if (!plan.find(plan.result())) {
    throw Error(ErrorCode::ParseError, "result '" + plan.result() + "' is not a step", origin + "/result");
  }
  std::set<std::string> seen;
  std::vector<std::string> stack{plan.result()};
  while (!stack.empty()) {
    auto l = stack.back();
    stack.pop_back();
    if (!seen.insert(l).second) continue;
    for (auto& r : step_references(plan.step(l))) stack.push_back(r);
  }
  for (const auto& s : plan.steps()) {
    if (!seen.count(s.label)) {
      throw Error(ErrorCode::ParseError, "step is unreachable from the result", origin + "/steps/" + s.label);
    }
  }
}

Arg parse_arg(const Json& j, bool allow_slots, const std::string& path) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s.size() >= 2 && s.front() == '|' && s.back() == '|') {
      auto inner = s.substr(1, s.size() - 2);
      if (inner.size() >= 2 && inner.front() == '{' && inner.back() == '}') {
        if (!allow_slots) throw Error(ErrorCode::ParseError, "slot placeholder outside a template", path);
        return Slot{inner.substr(1, inner.size() - 2), true};
      }
      if (!is_valid_label(inner)) throw Error(ErrorCode::ParseError, "bad step reference " + s, path);
      return StepRef{inner};
    }
    if (s.size() >= 2 && s.front() == '{' && s.back() == '}' &&
        s.find_first_of("{} ", 1) == s.size() - 1) {
      if (!allow_slots) throw Error(ErrorCode::ParseError, "slot placeholder outside a template", path);
      return Slot{s.substr(1, s.size() - 2), false};
    }
    return make_literal(s);
  }
  if (j.is_boolean()) return make_literal(j.get<bool>());
  if (j.is_number_integer()) return make_literal(j.get<std::int64_t>());
  if (j.is_number()) return make_literal(j.get<double>());
  if (j.is_object() && j.size() == 1 && j.contains("literal")) {
    // Escape hatch for strings that would otherwise read as references or slots.
    const auto& v = j["literal"];
    if (v.is_string()) return Literal{v.get<std::string>(), false};
    return parse_arg(v, false, path);
  }
  if (j.is_object() && j.size() == 1 && j.contains("datetime") && j["datetime"].is_string()) {
    return Literal{j["datetime"].get<std::string>(), true};
  }
  throw Error(ErrorCode::ParseError, "unsupported argument " + j.dump(), path);
}

Json arg_to_json(const Arg& a) {
  if (auto* r = std::get_if<StepRef>(&a)) return "|" + r->label + "|";
  if (auto* s = std::get_if<Slot>(&a)) return s->reference ? "|{" + s->name + "}|" : "{" + s->name + "}";
  const auto& l = std::get<Literal>(a);
  return std::visit(
      [&](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, std::string>) {
          bool ambiguous = (v.size() >= 2 && ((v.front() == '|' && v.back() == '|') ||
                                              (v.front() == '{' && v.back() == '}')));
          if (l.datetime != is_iso_datetime(v)) {
            return l.datetime ? Json{{"datetime", v}} : Json{{"literal", v}};
          }
          if (ambiguous) return Json{{"literal", v}};
          return v;
        } else {
          return v;
        }
      },
      l.value);
}

SqrPlan parse_plan_body(const Json& doc, bool allow_slots, const std::string& origin) {
  require_object(doc, origin);
  const auto& steps = require_field(doc, "steps", origin);
  require_object(steps, origin + "/steps");
  SqrPlan plan;
  for (auto it = steps.begin(); it != steps.end(); ++it) {
    const std::string path = origin + "/steps/" + it.key();
    if (!is_valid_label(it.key())) throw Error(ErrorCode::ParseError, "invalid step label", path);
    const auto& body = it.value();
    require_object(body, path);
    SqrStep step{it.key(), require_string(body, "op", path), {}};
    if (body.contains("args")) {
      require_array(body["args"], path + "/args");
      for (std::size_t i = 0; i < body["args"].size(); ++i) {
        step.args.push_back(parse_arg(body["args"][i], allow_slots, path + "/args/" + std::to_string(i)));
      }
    }
    plan.add_step(std::move(step));
  }
  if (plan.empty()) throw Error(ErrorCode::ParseError, "plan must have at least one step", origin + "/steps");
  plan.set_result(require_string(doc, "result", origin));
  check_plan_structure(plan, allow_slots, origin);
  return plan;
}

SqrPlan parse_plan(const Json& doc, const std::string& origin) {
  check_format(doc, "sqr_plan_v1", origin);
  return parse_plan_body(doc, false, origin);
}

SqrPlan parse_plan_text(const std::string& text, const std::string& origin) {
  return parse_plan(parse_json(text, origin), origin);
}

SqrPlan load_plan(const std::filesystem::path& path) { return parse_plan(load_json(path), path.filename().string()); }

Json plan_to_json(const SqrPlan& plan) {
  Json steps = Json::object();
  for (const auto& s : plan.steps()) {
    Json args = Json::array();
    for (const auto& a : s.args) args.push_back(arg_to_json(a));
    steps[s.label] = Json{{"op", s.op}, {"args", args}};
  }
  return Json{{"format", "sqr_plan_v1"}, {"steps", steps}, {"result", plan.result()}};
}

std::string serialize_plan(const SqrPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

}  // namespace aag
