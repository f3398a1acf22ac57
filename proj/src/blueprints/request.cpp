#include <algorithm>

#include "aag/blueprints.hpp"
#include "aag/registry.hpp"
#include "aag/typecheck.hpp"

namespace aag {

std::string_view to_string(ReportType t) {
  switch (t) {
    case ReportType::Ranking: return "ranking";
    case ReportType::TimeOverTime: return "time_over_time";
    case ReportType::ComparativeBenchmark: return "comparative_benchmark";
  }
  return "?";
}

namespace {

const std::vector<std::string> kComparisons = {"exact",     "greater_than",       "greater_than_equal",
                                               "less_than", "less_than_equal",    "contains"};

std::optional<ReportType> parse_report_type(const std::string& s) {
  for (auto t : {ReportType::Ranking, ReportType::TimeOverTime, ReportType::ComparativeBenchmark}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

bool related(const Ring& ring, const std::string& a, const std::string& b) {
  if (a == b) return true;
  return std::any_of(ring.relationships.begin(), ring.relationships.end(), [&](const RelationshipDef& r) {
    return (r.from_entity == a && r.to_entity == b) || (r.from_entity == b && r.to_entity == a);
  });
}

class RequestParser {
 public:
  RequestParser(const Ring& ring, std::string origin) : ring_(ring), origin_(std::move(origin)) {}

  ReportRequest parse(const Json& doc) {
    require_object(doc, origin_);
    check_format(doc, "report_request_v1", origin_);

    auto type = require_string(doc, "report_type", origin_);
    if (auto t = parse_report_type(type)) {
      req_.report_type = *t;
    } else {
      fail("/report_type", "unknown report type '" + type + "'");
    }

    const auto& target = require_field(doc, "target", origin_);
    require_object(target, origin_ + "/target");
    req_.target_entity = require_string(target, "entity", origin_ + "/target");
    req_.target = literal(require_field(target, "value", origin_ + "/target"), "/target/value");
    const EntityDef* entity = ring_.find_entity(req_.target_entity);
    if (!entity) {
      fail("/target/entity", "unknown entity '" + req_.target_entity + "'");
    } else if (!entity->identifier()) {
      fail("/target/entity", "entity '" + req_.target_entity + "' has no Identifier attribute");
    } else {
      check_comparison("exact", *entity->identifier(), req_.target, "/target/value");
    }

    auto metric = require_string(doc, "metric", origin_);
    if (entity) resolve_metric(*entity, metric);

    if (doc.contains("filters")) {
      const auto& fs = doc["filters"];
      require_array(fs, origin_ + "/filters");
      for (std::size_t i = 0; i < fs.size(); ++i) parse_filter(fs[i], "/filters/" + std::to_string(i));
    }

    if (doc.contains("benchmark_value")) {
      req_.benchmark = literal(doc["benchmark_value"], "/benchmark_value");
      if (!is_numeric(req_.benchmark->value)) fail("/benchmark_value", "benchmark must be a number");
    } else if (req_.report_type == ReportType::ComparativeBenchmark) {
      fail("/benchmark_value", "comparative_benchmark requires benchmark_value");
    }

    parse_time(doc);
    if (!violations_.empty()) throw ValidationError(violations_);
    return req_;
  }

 private:
  void fail(const std::string& path, const std::string& message) {
    violations_.push_back({"ValidationError", origin_ + path, message});
  }

  Literal literal(const Json& j, const std::string& path) {
    Arg a = parse_arg(j, false, origin_ + path);
    if (const auto* l = as_literal(a)) return *l;
    throw Error(ErrorCode::ParseError, "expected a literal value", origin_ + path);
  }

  // "Entity.attr", a name, or a nicename; the target entity is searched first.
  std::optional<AttributeRef> resolve(const std::string& text, const std::string& path) {
    auto dot = text.find('.');
    if (dot != std::string::npos) {
      auto ename = text.substr(0, dot);
      const EntityDef* e = ring_.find_entity(ename);
      const AttributeDef* a = e ? resolve_attribute(*e, text.substr(dot + 1)) : nullptr;
      if (a) return AttributeRef{e->name, a->name};
    } else {
      std::vector<const EntityDef*> order;
      if (const auto* t = ring_.find_entity(req_.target_entity)) order.push_back(t);
      for (const auto& e : ring_.entities) {
        if (e.name != req_.target_entity) order.push_back(&e);
      }
      for (const auto* e : order) {
        if (const auto* a = resolve_attribute(*e, text)) return AttributeRef{e->name, a->name};
      }
    }
    fail(path, "unknown attribute '" + text + "'");
    return std::nullopt;
  }

  void resolve_metric(const EntityDef& target, const std::string& text) {
    auto ref = resolve(text, "/metric");
    if (!ref) return;
    const auto& a = ring_.attribute(ref->entity, ref->attribute);
    if (!a.types.contains(AttributeType::Metric)) {
      fail("/metric", "'" + text + "' is not a Metric attribute");
      return;
    }
    if (!a.derived && ref->entity != target.name) {
      fail("/metric", "metric '" + text + "' belongs to " + ref->entity + ", not the target entity " +
                          target.name + "; use an aggregated metric");
      return;
    }
    if (!related(ring_, target.name, ref->entity)) {
      fail("/metric", "no relationship between " + target.name + " and " + ref->entity);
      return;
    }
    req_.metric = *ref;
  }

  // Only base attributes on the target entity or a directly related one can filter.
  std::optional<AttributeRef> filter_attribute(const std::string& text, const std::string& path) {
    auto ref = resolve(text, path);
    if (!ref) return std::nullopt;
    if (ring_.attribute(ref->entity, ref->attribute).derived) {
      fail(path, "cannot filter on the aggregated attribute '" + text + "'");
      return std::nullopt;
    }
    if (!related(ring_, req_.target_entity, ref->entity)) {
      fail(path, "no relationship between " + req_.target_entity + " and " + ref->entity);
      return std::nullopt;
    }
    return ref;
  }

  void check_comparison(const std::string& op, const AttributeDef& attr, const Literal& value,
                        const std::string& path) {
    // The registry accepts any scalar for exact; the column decides what can match.
    auto storage = attr.source.empty() ? std::string() : ring_.storage_type(attr.source.front());
    bool text = std::holds_alternative<std::string>(value.value);
    if (op != "contains" && !is_null(value.value) && (storage == "text") != text) {
      fail(path, "a " + std::string(text ? "string" : "number") + " cannot be compared with " + attr.name +
                     " (stored as " + storage + ")");
      return;
    }
    try {
      match_arguments(Registry::builtin().get(op), {attr.types, literal_types(value)}, op);
    } catch (const Error& e) {
      fail(path, "value does not fit " + attr.name + " " + attr.types.str() + " under " + op + ": " + e.detail());
    }
  }

  void parse_filter(const Json& f, const std::string& rel) {
    auto path = origin_ + rel;
    require_object(f, path);
    auto attr = require_string(f, "attribute", path);
    auto op = f.contains("op") ? require_string(f, "op", path) : std::string("exact");
    auto value = literal(require_field(f, "value", path), rel + "/value");
    if (std::find(kComparisons.begin(), kComparisons.end(), op) == kComparisons.end()) {
      fail(rel + "/op", "unsupported comparison '" + op + "'");
      return;
    }
    auto ref = filter_attribute(attr, rel + "/attribute");
    if (!ref) return;
    check_comparison(op, ring_.attribute(ref->entity, ref->attribute), value, rel + "/value");
    req_.filters.push_back({*ref, op, value});
  }

  std::optional<TimeValue> time_value(const Json& doc, const char* key) {
    if (!doc.contains(key)) return std::nullopt;
    const auto& j = doc[key];
    std::string rel = std::string("/") + key;
    if (j.is_object() && !j.contains("literal") && !j.contains("datetime")) {
      TimeValue t{literal(require_field(j, "from", origin_ + rel), rel + "/from"),
                  literal(require_field(j, "to", origin_ + rel), rel + "/to")};
      return t;
    }
    return TimeValue{literal(j, rel), std::nullopt};
  }

  void parse_time(const Json& doc) {
    req_.start_time = time_value(doc, "start_time");
    req_.end_time = time_value(doc, "end_time");
    bool any = req_.start_time || req_.end_time;
    if (doc.contains("time_attribute")) {
      req_.time_attribute = filter_attribute(require_string(doc, "time_attribute", origin_), "/time_attribute");
    } else if (any) {
      fail("/time_attribute", "start_time/end_time need a time_attribute");
    }
    if (req_.report_type == ReportType::TimeOverTime) {
      if (!req_.time_attribute && !doc.contains("time_attribute")) {
        fail("/time_attribute", "time_over_time requires time_attribute");
      }
      if (!req_.start_time) fail("/start_time", "time_over_time requires start_time");
      if (!req_.end_time) fail("/end_time", "time_over_time requires end_time");
    }
    if (!req_.time_attribute) return;
    const auto& attr = ring_.attribute(req_.time_attribute->entity, req_.time_attribute->attribute);
    for (auto [t, key] : {std::pair{&req_.start_time, "start_time"}, std::pair{&req_.end_time, "end_time"}}) {
      if (!*t) continue;
      std::string rel = std::string("/") + key;
      if ((*t)->is_range()) {
        check_comparison("greater_than_equal", attr, (*t)->at, rel + "/from");
        check_comparison("less_than", attr, *(*t)->to, rel + "/to");
      } else {
        check_comparison("exact", attr, (*t)->at, rel);
      }
    }
  }

  const Ring& ring_;
  std::string origin_;
  ReportRequest req_;
  std::vector<Violation> violations_;
};

}  // namespace

ReportRequest parse_request(const Ring& ring, const Json& doc, const std::string& origin) {
  return RequestParser(ring, origin).parse(doc);
}

ReportRequest load_request(const Ring& ring, const std::filesystem::path& path) {
  return parse_request(ring, load_json(path), path.string());
}

}  // namespace aag
