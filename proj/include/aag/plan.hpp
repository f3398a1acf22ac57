#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aag/io.hpp"
#include "aag/value.hpp"

namespace aag {

struct StepRef {
  std::string label;
  bool operator==(const StepRef&) const = default;
};

struct Literal {
  Value value;
  bool datetime = false;  // ISO-8601 string tagged at parse time
  bool operator==(const Literal&) const = default;
};

// Template placeholder. `reference` slots ("|{name}|") stand for a bound
// plan's terminal; the others ("{name}") are substituted by a literal.
struct Slot {
  std::string name;
  bool reference = false;
  bool operator==(const Slot&) const = default;
};

using Arg = std::variant<StepRef, Literal, Slot>;

struct SqrStep {
  std::string label;
  std::string op;
  std::vector<Arg> args;
  bool operator==(const SqrStep&) const = default;
};

class SqrPlan {
 public:
  void add_step(SqrStep step);
  void set_result(std::string label) { result_ = std::move(label); }

  const std::vector<SqrStep>& steps() const { return steps_; }
  std::vector<SqrStep>& mutable_steps() { return steps_; }
  const std::string& result() const { return result_; }
  const SqrStep* find(std::string_view label) const;
  const SqrStep& step(std::string_view label) const;
  bool empty() const { return steps_.empty(); }

  void remove_step(std::string_view label);

  bool operator==(const SqrPlan& o) const { return steps_ == o.steps_ && result_ == o.result_; }

 private:
  void reindex();

  std::vector<SqrStep> steps_;
  std::string result_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

bool is_valid_label(std::string_view label);
bool is_iso_datetime(std::string_view s);
Literal make_literal(Value v);

std::vector<std::string> step_references(const SqrStep& step);
const std::string& ref_label(const Arg& a);  // throws unless StepRef
bool is_ref(const Arg& a);
const Literal* as_literal(const Arg& a);

// Dangling references, unknown result, unreachable steps, slots where not
// allowed. Cycles are left to the type checker.
void check_plan_structure(const SqrPlan& plan, bool allow_slots, const std::string& origin);

Arg parse_arg(const Json& j, bool allow_slots, const std::string& path);
Json arg_to_json(const Arg& a);

// Reads the steps/result body shared by plans and templates.
SqrPlan parse_plan_body(const Json& doc, bool allow_slots, const std::string& origin);

SqrPlan parse_plan(const Json& doc, const std::string& origin = "plan");
SqrPlan parse_plan_text(const std::string& text, const std::string& origin = "plan");
SqrPlan load_plan(const std::filesystem::path& path);
Json plan_to_json(const SqrPlan& plan);
std::string serialize_plan(const SqrPlan& plan);

}  // namespace aag
