#pragma once

// Logical blocks between SQR plans and SQL text. One block becomes one CTE.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aag/plan.hpp"

namespace aag::detail {

struct Expr {
  enum class Kind { BaseAttr, Column, Param, Call, Agg, RowNumber };
  Kind kind = Kind::Param;
  std::string entity, attribute;  // BaseAttr
  int block = -1, column = -1;    // Column
  int param = -1;                 // Param (1-based)
  std::string op;                 // Call, Agg
  std::vector<Expr> args;         // Call/Agg inputs; RowNumber sort keys
  bool desc = false;              // RowNumber
};

struct OrderKey {
  Expr expr;
  bool desc = false;
};

struct Scope {
  std::string label;
  std::vector<std::string> entities;  // first appearance
  std::vector<std::pair<std::string, std::string>> attributes;
};

struct Block {
  int index = 0;
  bool base = false;  // scans the scope's base universe
  int scope = -1;
  std::vector<int> inputs;  // cross-joined upstream blocks otherwise
  std::vector<Expr> where;
  bool grouped = false;
  std::vector<Expr> group_keys;
  std::vector<Expr> outputs;
  std::vector<Arg> output_args;  // the plan value behind each output
  std::vector<Expr> having;
  std::vector<OrderKey> order;  // user sort keys; tie-break appended at emission
  bool emit_order = false;
  int limit_param = -1;
  std::string return_label;  // set when the block is a Return's final block
  std::set<std::string> steps;
  std::string produces;
};

struct Lowered {
  std::vector<Block> blocks;
  std::vector<Scope> scopes;
  std::vector<Literal> params;
  int final_block = -1;
  std::string final_return;  // empty when the plan ends in an implicit return
  std::vector<Arg> final_items;
  bool ordered = false;
};

Lowered lower_plan(const SqrPlan& plan);

}  // namespace aag::detail
