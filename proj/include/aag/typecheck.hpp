#pragma once

#include <map>
#include <string>
#include <vector>

#include "aag/plan.hpp"
#include "aag/registry.hpp"
#include "aag/ring.hpp"

namespace aag {

struct StepInfo {
  TypeSet types;
  ColumnMeta column;               // value-producing steps
  std::vector<ColumnMeta> schema;  // collect and return steps
  std::string entity;              // retrieve_entity: the ring entity name
};

class PlanTypes {
 public:
  const StepInfo& info(const std::string& label) const;
  const TypeSet& types(const std::string& label) const { return info(label).types; }
  std::map<std::string, TypeSet> type_map() const;
  void set(const std::string& label, StepInfo info) { infos_[label] = std::move(info); }
  bool has(const std::string& label) const { return infos_.count(label) > 0; }

 private:
  std::map<std::string, StepInfo> infos_;
};

TypeSet literal_types(const Literal& l);

// Labels in dependency order (inputs first); throws CycleError.
std::vector<std::string> topological_order(const SqrPlan& plan);

PlanTypes typecheck_plan(const Ring& ring, const SqrPlan& plan, const Registry& registry = Registry::builtin());

// Ring-independent output column names of a collect or return step, with
// duplicate names suffixed " 2", " 3", ...
std::vector<std::string> output_column_names(const SqrPlan& plan, const std::string& label);
// Ring-independent name of a value-producing argument.
std::string value_name(const SqrPlan& plan, const Arg& arg);

// The collect step feeding a return, following the registry argument order.
const SqrStep& collect_of(const SqrPlan& plan, const SqrStep& ret);

}  // namespace aag
