#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aag/compiler.hpp"
#include "aag/io.hpp"
#include "aag/plan_template.hpp"
#include "aag/ring.hpp"
#include "aag/statements.hpp"

namespace aag {

// ---- requests --------------------------------------------------------------------

enum class ReportType { Ranking, TimeOverTime, ComparativeBenchmark };
std::string_view to_string(ReportType t);

struct AttributeRef {
  std::string entity;
  std::string attribute;
};

struct RequestFilter {
  AttributeRef attribute;
  std::string op;  // a comparison from the registry
  Literal value;
};

// A point in time, or the half-open range [from, to).
struct TimeValue {
  Literal at;
  std::optional<Literal> to;
  bool is_range() const { return to.has_value(); }
};

struct ReportRequest {
  ReportType report_type = ReportType::Ranking;
  std::string target_entity;
  Literal target;
  AttributeRef metric;
  std::vector<RequestFilter> filters;
  std::optional<Literal> benchmark;
  std::optional<AttributeRef> time_attribute;
  std::optional<TimeValue> start_time, end_time;
};

// `ring` must already carry derived attributes.
ReportRequest parse_request(const Ring& ring, const Json& doc, const std::string& origin = "request");
ReportRequest load_request(const Ring& ring, const std::filesystem::path& path);

// ---- blueprints ------------------------------------------------------------------

struct SlotRule {
  enum Kind { AccessPlan, Filter, Source, Constant } kind = Source;
  std::string name;                  // AccessPlan: metric | target_key; Source: literal source
  std::vector<std::string> filters;  // Filter: instance | cohort | start | end
  Literal constant;
};

struct InfoRequirement {
  std::string id;
  std::string plan_template;
  std::string statement;  // statement template id; defaults to plan_template
  std::map<std::string, SlotRule> bindings;
};

struct Blueprint {
  ReportType report_type = ReportType::Ranking;
  std::string description;      // {target}, {metric}, {entity}, {entity_plural}, {conditions}, ...
  std::string prompt_template;  // {report description} and {facts}
  std::vector<InfoRequirement> requirements;
};

Blueprint parse_blueprint(const Json& doc, const std::string& origin);
Blueprint load_blueprint(const std::filesystem::path& path);

struct Library {
  std::map<std::string, PlanTemplate> plans;
  std::map<std::string, StatementTemplate> statements;
  std::map<ReportType, Blueprint> blueprints;

  const Blueprint& blueprint(ReportType t) const;
};

// Reads templates/plan_templates_v1.json, templates/statements_v1.json and
// blueprints/*.json under `dir`, and cross-checks their references.
Library load_library(const std::filesystem::path& dir);

struct InstantiatedPlan {
  std::string requirement;
  std::string plan_template;
  std::string statement;
  SqrPlan plan;
  StatementInputs inputs;
};

std::vector<InstantiatedPlan> instantiate(const Blueprint& bp, const Ring& ring, const Library& lib,
                                          const ReportRequest& req);

// ---- prompts -----------------------------------------------------------------------

enum class FactMode { Statements, Tables };

// system is everything before the facts; system + user is the full prompt.
struct Prompt {
  std::string system;
  std::string user;
  std::string text() const { return system + user; }
};

std::string report_description(const Blueprint& bp, const Ring& ring, const ReportRequest& req);
// One fact per line for statements; tables separated by blank lines.
std::string facts_block(const std::vector<std::string>& facts, FactMode mode);
Prompt build_prompt(const Blueprint& bp, const Ring& ring, const ReportRequest& req,
                    const std::vector<std::string>& facts, FactMode mode);

// ---- execution ----------------------------------------------------------------------

struct RequirementResult {
  InstantiatedPlan plan;
  CompiledQuery query;
  ResultSet result;
  FactStatement statement;
  std::string table;
};

// Compiles and executes every requirement (in parallel, one connection per
// worker) and renders statements and tables in requirement order.
std::vector<RequirementResult> run_report(const Ring& ring, const Library& lib, const ReportRequest& req,
                                          unsigned workers = 4);

}  // namespace aag
