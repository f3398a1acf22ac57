#pragma once

#include <string>
#include <utility>
#include <vector>

#include "aag/plan.hpp"
#include "aag/ring.hpp"
#include "aag/value.hpp"

namespace aag {

struct Subplan {
  std::size_t id = 0;                 // 1-based; also the CTE suffix (sp<id>)
  std::vector<std::string> steps;     // partition of the plan's labels
  std::vector<std::size_t> consumes;  // upstream subplan ids
  std::string produces;               // label whose value this subplan materializes
  // Base scope when the subplan scans ring tables: entities and attributes
  // referenced anywhere in the owning Return's scope.
  std::vector<std::string> entities;
  std::vector<std::pair<std::string, std::string>> attributes;
};

struct ResolvedJoin {
  JoinDef join;
  std::string origin;  // "intra-entity" or the relationship name
};

struct JoinResolution {
  std::vector<std::string> required_tables;  // anchor primary table first
  std::vector<ResolvedJoin> join_sequence;
};

struct CompiledQuery {
  std::string sql;
  std::vector<Value> params;  // bound to ?1..?n
  std::vector<ColumnMeta> output_columns;
  bool ordered = false;  // row order is part of the result contract
};

std::vector<Subplan> decompose(const SqrPlan& plan);
JoinResolution resolve_joins(const Ring& ring, const Subplan& subplan);
CompiledQuery compile(const Ring& ring, const SqrPlan& plan);

}  // namespace aag
