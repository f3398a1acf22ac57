#include "aag/registry.hpp"

#include <limits>

#include "aag/error.hpp"

namespace aag {

std::string_view to_string(OperationType t) {
  switch (t) {
    case OperationType::Aggregation: return "Aggregation";
    case OperationType::Boolean: return "Boolean";
    case OperationType::Arithmetic: return "Arithmetic";
    case OperationType::DataOperation: return "DataOperation";
    case OperationType::Retrieval: return "Retrieval";
  }
  return "";
}

std::size_t Arity::max() const {
  return kind == ArityKind::AtLeast ? std::numeric_limits<std::size_t>::max() : count;
}

std::string Arity::str() const {
  switch (kind) {
    case ArityKind::Exactly: return std::to_string(count);
    case ArityKind::AtMost: return "<=" + std::to_string(count);
    case ArityKind::AtLeast: return ">=" + std::to_string(count);
  }
  return "";
}

namespace {

using T = AttributeType;

Arity exactly(std::size_t n) { return {ArityKind::Exactly, n}; }
Arity at_most(std::size_t n) { return {ArityKind::AtMost, n}; }
Arity at_least(std::size_t n) { return {ArityKind::AtLeast, n}; }

const TypeSet kAM{T::Arithmetic, T::Metric};
const TypeSet kAMD{T::Arithmetic, T::Metric, T::Datetime};

OperationSignature aggregation(std::string name, std::string nicename, TypeSet in, TypeSet out, std::size_t n = 1) {
  return {std::move(name), std::move(nicename), OperationType::Aggregation,
          {{exactly(n), in}, {at_most(1), {T::Grouping}}}, out};
}

Registry make_builtin() {
  Registry r;
  // Aggregations
  r.register_operation(aggregation("average", "average", kAM, kAM));
  r.register_operation(aggregation("correlation", "correlation", kAMD, kAMD, 2));
  r.register_operation(aggregation("count", "count", kAM, kAM));
  r.register_operation(aggregation("count_unique", "count unique", kAM, kAM));
  r.register_operation(aggregation("get_one", "get one", kAMD, kAMD));
  r.register_operation(aggregation("max", "maximum", kAMD, kAMD));
  r.register_operation(aggregation("median", "median", kAMD, kAMD));
  r.register_operation(aggregation("min", "minimum", kAMD, kAMD));
  r.register_operation(aggregation("standard_deviation", "standard deviation", kAM, kAM));
  r.register_operation(aggregation("string_aggregation", "string aggregation", kAMD, kAMD));
  r.register_operation(aggregation("sum", "sum", {T::Arithmetic}, kAM));

  // Boolean
  const TypeSet filter{T::Filter};
  const TypeSet comparable{T::Arithmetic, T::Metric, T::Datetime};
  auto boolean = [&](std::string name, std::string nice, std::vector<InputSpec> in) {
    r.register_operation({std::move(name), std::move(nice), OperationType::Boolean, std::move(in), filter});
  };
  boolean("and", "and", {{at_least(1), filter}});
  boolean("contains", "contains", {{exactly(1), {T::Attribute}}, {exactly(1), {T::Metric}}});
  boolean("exact", "exact",
          {{exactly(2), {T::Arithmetic, T::Metric, T::Categorical, T::String, T::Datetime, T::Identifier}}});
  boolean("greater_than", "greater than", {{exactly(2), comparable}});
  boolean("greater_than_equal", "greater than or equal", {{exactly(2), comparable}});
  boolean("less_than", "less than", {{exactly(2), comparable}});
  boolean("less_than_equal", "less than or equal", {{exactly(2), comparable}});
  boolean("not", "not", {{exactly(1), filter}});
  boolean("or", "or", {{at_least(1), filter}});

  // Arithmetic
  auto arith = [&](std::string name, std::string nice, std::vector<InputSpec> in, TypeSet out) {
    r.register_operation({std::move(name), std::move(nice), OperationType::Arithmetic, std::move(in), out});
  };
  arith("absolute_value", "absolute value", {{exactly(1), kAM}}, kAM);
  arith("add", "add", {{at_least(2), kAM}}, kAMD);
  arith("divide", "divide", {{at_least(2), kAM}}, kAMD);
  arith("duration", "duration", {{exactly(1), {T::Datetime}}, {exactly(1), {T::Datetime}}}, kAM);
  arith("multiply", "multiply", {{at_least(2), kAM}}, kAMD);
  arith("percent_change", "percent change", {{exactly(2), kAM}}, kAM);
  arith("square_root", "square root", {{exactly(1), kAMD}}, kAMD);
  arith("subtract", "subtract", {{at_least(2), kAMD}}, kAMD);

  // Data operations
  auto data = [&](std::string name, std::string nice, std::vector<InputSpec> in, TypeSet out) {
    r.register_operation({std::move(name), std::move(nice), OperationType::DataOperation, std::move(in), out});
  };
  data("collect", "collect", {{at_least(1), {T::Attribute}}}, {T::AttributeCollection});
  data("groupby", "group by", {{at_least(1), {T::Categorical, T::Datetime}}}, {T::Grouping});
  data("limit", "limit", {{exactly(1), {T::Attribute}}}, {T::Limit});
  data("return", "return",
       {{exactly(1), {T::AttributeCollection}},
        {at_most(1), filter},
        {at_most(1), {T::Sort}},
        {at_most(1), {T::Limit}}},
       {T::Entity});
  data("row_number", "row number", {{exactly(1), {T::Sort}}}, {T::RowNum});
  data("sort", "sort", {{at_least(1), {T::Attribute}}, {exactly(1), {T::String}}}, {T::Sort});

  // Retrieval
  r.register_operation({"retrieve_attribute", "retrieve attribute", OperationType::Retrieval,
                        {{exactly(1), {T::Entity}}, {exactly(1), {T::String}}}, {T::Attribute}});
  r.register_operation({"retrieve_entity", "retrieve entity", OperationType::Retrieval,
                        {{exactly(1), {T::String}}}, {T::Entity}});
  return r;
}

}  // namespace

const Registry& Registry::builtin() {
  static const Registry r = make_builtin();
  return r;
}

void Registry::register_operation(OperationSignature sig) {
  if (find(sig.name)) throw Error(ErrorCode::ValidationError, "operation already registered", sig.name);
  ops_.push_back(std::move(sig));
}

const OperationSignature* Registry::find(std::string_view name) const {
  for (const auto& op : ops_) {
    if (op.name == name) return &op;
  }
  return nullptr;
}

const OperationSignature& Registry::get(std::string_view name) const {
  const auto* op = find(name);
  if (!op) throw Error(ErrorCode::TypeError, "unknown operation '" + std::string(name) + "'");
  return *op;
}

std::vector<std::size_t> match_arguments(const OperationSignature& sig, const std::vector<TypeSet>& args,
                                         const std::string& label) {
  std::vector<std::size_t> groups(args.size(), 0);
  std::size_t pos = 0;
  for (std::size_t g = 0; g < sig.inputs.size(); ++g) {
    const auto& in = sig.inputs[g];
    std::size_t count = 0;
    while (pos < args.size() && count < in.arity.max() && accepts(in.allowed, args[pos])) {
      groups[pos++] = g;
      ++count;
    }
    if (count < in.arity.min()) {
      if (pos < args.size()) {
        throw Error(ErrorCode::TypeError,
                    sig.name + " expected " + in.allowed.str() + ", found " + args[pos].str(), label);
      }
      throw Error(ErrorCode::ArityError,
                  sig.name + " expects " + in.arity.str() + " argument(s) of " + in.allowed.str() + ", got " +
                      std::to_string(count),
                  label);
    }
  }
  if (pos < args.size()) {
    TypeSet all;
    for (const auto& in : sig.inputs) {
      if (accepts(in.allowed, args[pos])) {
        throw Error(ErrorCode::ArityError, sig.name + " got too many arguments", label);
      }
      all = all | in.allowed;
    }
    throw Error(ErrorCode::TypeError, sig.name + " expected " + all.str() + ", found " + args[pos].str(), label);
  }
  return groups;
}

}  // namespace aag

namespace aag {

std::optional<Units> units_after(std::string_view op, const std::optional<Units>& input) {
  static const std::vector<std::string_view> keep = {"average", "max", "min", "median", "sum",
                                                     "standard_deviation", "get_one", "absolute_value",
                                                     "add", "subtract"};
  for (auto k : keep) {
    if (k == op) return input;
  }
  if (op == "percent_change") return Units{"%", "%"};
  if (op == "duration") return Units{"second", "seconds"};
  return std::nullopt;
}

bool derives_attributes(const OperationSignature& sig) {
  return sig.op_type == OperationType::Aggregation && sig.name != "get_one" && sig.name != "string_aggregation" &&
         sig.name != "correlation";
}

}  // namespace aag
