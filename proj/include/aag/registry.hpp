#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "aag/attribute_type.hpp"

namespace aag {

enum class OperationType { Aggregation, Boolean, Arithmetic, DataOperation, Retrieval };

std::string_view to_string(OperationType t);

enum class ArityKind { Exactly, AtMost, AtLeast };

struct Arity {
  ArityKind kind = ArityKind::Exactly;
  std::size_t count = 1;

  std::size_t min() const { return kind == ArityKind::AtMost ? 0 : count; }
  std::size_t max() const;
  std::string str() const;  // "1", "<=1", ">=2"
};

struct InputSpec {
  Arity arity;
  TypeSet allowed;
};

struct OperationSignature {
  std::string name;      // plan spelling, e.g. "count_unique"
  std::string nicename;  // used in derived names, e.g. "count unique"
  OperationType op_type = OperationType::Aggregation;
  std::vector<InputSpec> inputs;
  TypeSet output;
};

class Registry {
 public:
  // The built-in operation table.
  static const Registry& builtin();

  // Adds a new row; existing rows can never be replaced.
  void register_operation(OperationSignature sig);
  const OperationSignature* find(std::string_view name) const;
  const OperationSignature& get(std::string_view name) const;  // throws TypeError
  const std::vector<OperationSignature>& operations() const { return ops_; }

 private:
  std::vector<OperationSignature> ops_;
};

// Greedy left-to-right assignment of argument types to input groups.
// Returns the input-group index of each argument; throws TypeError or
// ArityError located at `label`.
std::vector<std::size_t> match_arguments(const OperationSignature& sig, const std::vector<TypeSet>& args,
                                         const std::string& label);

}  // namespace aag

#include <optional>
#include "aag/value.hpp"

namespace aag {

// Units carried by an operation's output given its first input's units.
// Counts and correlations are unitless; percent change yields "%".
std::optional<Units> units_after(std::string_view op, const std::optional<Units>& input);

// The aggregations that produce derived attributes (metric-valued summaries).
bool derives_attributes(const OperationSignature& sig);

}  // namespace aag
