#include <algorithm>

#include "internal.hpp"

namespace aag {

namespace detail {

namespace {

std::string phrase(const std::string& op) {
  if (op == "exact") return "is";
  if (op == "greater_than") return "is greater than";
  if (op == "greater_than_equal") return "is at least";
  if (op == "less_than") return "is less than";
  if (op == "less_than_equal") return "is at most";
  if (op == "contains") return "contains";
  return op;
}

std::string literal_text(const AttributeDef& attr, const Literal& l, std::vector<TypedValue>* audit) {
  TypedValue tv{attr.types, l.value, std::nullopt, attr.nicename};
  if (audit && is_numeric(l.value)) audit->push_back(tv);
  return format_value(tv);
}

std::string time_clause(const Ring& ring, const ReportRequest& req, const TimeValue& t,
                        std::vector<TypedValue>* audit) {
  const auto& a = ring.attribute(req.time_attribute->entity, req.time_attribute->attribute);
  if (!t.is_range()) return a.nicename + " is " + literal_text(a, t.at, audit);
  return a.nicename + " is at least " + literal_text(a, t.at, audit) + " and less than " +
         literal_text(a, *t.to, audit);
}

}  // namespace

std::string conditions_text(const Ring& ring, const ReportRequest& req, const std::vector<std::string>& filters,
                            std::vector<TypedValue>* audit) {
  auto has = [&](const char* n) { return std::find(filters.begin(), filters.end(), n) != filters.end(); };
  std::vector<std::string> clauses;
  if (has("cohort") && !req.filters.empty()) {
    std::string s;
    for (const auto& f : req.filters) {
      const auto& a = ring.attribute(f.attribute.entity, f.attribute.attribute);
      if (!s.empty()) s += " and ";
      s += a.nicename + " " + phrase(f.op) + " " + literal_text(a, f.value, audit);
    }
    clauses.push_back("where " + s);
  }
  bool start = has("start") && req.start_time, end = has("end") && req.end_time;
  if (start && end) {
    const auto& a = ring.attribute(req.time_attribute->entity, req.time_attribute->attribute);
    if (!req.start_time->is_range() && !req.end_time->is_range()) {
      clauses.push_back("from " + a.nicename + " " + literal_text(a, req.start_time->at, audit) + " to " +
                        a.nicename + " " + literal_text(a, req.end_time->at, audit));
    } else {
      clauses.push_back("from " + time_clause(ring, req, *req.start_time, audit) + ", to " +
                        time_clause(ring, req, *req.end_time, audit));
    }
  } else if (start || end) {
    auto c = time_clause(ring, req, start ? *req.start_time : *req.end_time, audit);
    if (!clauses.empty()) {
      clauses.back() += " and " + c;
    } else {
      clauses.push_back("where " + c);
    }
  }
  if (clauses.empty()) return "";
  std::string out = " (";
  for (std::size_t i = 0; i < clauses.size(); ++i) out += (i ? "; " : "") + clauses[i];
  return out + ")";
}

StatementInputs base_inputs(const Ring& ring, const ReportRequest& req) {
  StatementInputs in;
  const auto& e = ring.entity(req.target_entity);
  const auto& id = *e.identifier();
  in.text["metric"] = ring.attribute(req.metric.entity, req.metric.attribute).nicename;
  in.text["target"] = literal_text(id, req.target, &in.values);
  in.text["entity"] = e.nicename.singular;
  in.text["entity_plural"] = e.nicename.plural;
  return in;
}

}  // namespace detail

namespace {

std::string substitute(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) {
    auto token = "{" + k + "}";
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + v.size())) {
      text.replace(pos, token.size(), v);
    }
  }
  return text;
}

}  // namespace

std::string report_description(const Blueprint& bp, const Ring& ring, const ReportRequest& req) {
  auto in = detail::base_inputs(ring, req);
  in.text["conditions"] = detail::conditions_text(ring, req, {"cohort", "start", "end"}, nullptr);
  in.text["benchmark"] = req.benchmark ? format_value({{AttributeType::Arithmetic}, req.benchmark->value, {}, ""}) : "";
  auto out = substitute(bp.description, in.text);
  if (out.find('{') != std::string::npos) {
    throw Error(ErrorCode::UnboundSlot, "unresolved placeholder in description: " + out, "description");
  }
  return out;
}

std::string facts_block(const std::vector<std::string>& facts, FactMode mode) {
  std::string out;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (i && mode == FactMode::Tables) out += "\n";
    out += facts[i];
    out += "\n";
  }
  return out;
}

Prompt build_prompt(const Blueprint& bp, const Ring& ring, const ReportRequest& req,
                    const std::vector<std::string>& facts, FactMode mode) {
  if (facts.empty()) throw Error(ErrorCode::EmptyFacts, "no facts to put in the prompt");
  auto text = substitute(bp.prompt_template, {{"report description", report_description(bp, ring, req)}});
  auto pos = text.find("{facts}");
  Prompt p;
  p.system = text.substr(0, pos);
  p.user = facts_block(facts, mode) + text.substr(pos + 7);
  return p;
}

}  // namespace aag
