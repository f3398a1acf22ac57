// Naive evaluator: nested-loop joins, hash-free partitioning by linear scan,
// aggregates by direct iteration. Deliberately shares no code with the SQL
// compiler; semantics follow the shared policy constants.

#include <algorithm>
#include <cmath>
#include <ctime>
#include <functional>
#include <set>

#include "aag/error.hpp"
#include "aag/oracle.hpp"
#include "aag/policy.hpp"
#include "aag/registry.hpp"
#include "aag/typecheck.hpp"

namespace aag {

namespace {

// ---- scalar semantics ----------------------------------------------------------

using I64 = std::int64_t;

const I64* as_int(const Value& v) { return std::get_if<I64>(&v); }

std::optional<double> num(const Value& v) {
  if (auto* i = std::get_if<I64>(&v)) return static_cast<double>(*i);
  if (auto* d = std::get_if<double>(&v)) return *d;
  if (auto* b = std::get_if<bool>(&v)) return *b ? 1.0 : 0.0;
  return std::nullopt;
}

Value truth(std::optional<bool> b) {
  if (!b) return std::monostate{};
  return *b;
}

std::optional<bool> as_truth(const Value& v) {
  if (is_null(v)) return std::nullopt;
  if (auto* b = std::get_if<bool>(&v)) return *b;
  auto d = num(v);
  return d ? std::optional<bool>(*d != 0.0) : std::optional<bool>(false);
}

Value binary_arith(const Value& a, const Value& b, char op) {
  if (is_null(a) || is_null(b)) return std::monostate{};
  const I64* x = as_int(a);
  const I64* y = as_int(b);
  if (x && y && op != '/') {
    I64 r;
    bool overflow = op == '+'   ? __builtin_add_overflow(*x, *y, &r)
                    : op == '-' ? __builtin_sub_overflow(*x, *y, &r)
                                : __builtin_mul_overflow(*x, *y, &r);
    if (!overflow) return r;
  }
  auto p = num(a);
  auto q = num(b);
  if (!p || !q) return std::monostate{};
  switch (op) {
    case '+': return *p + *q;
    case '-': return *p - *q;
    case '*': return *p * *q;
    default:
      if (*q == 0.0) return std::monostate{};
      return *p / *q;
  }
}

std::string text_of(const Value& v) {
  if (auto* b = std::get_if<bool>(&v)) return *b ? "1" : "0";
  return sql_text(v);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
I64 days_from_civil(I64 y, unsigned m, unsigned d) {
  y -= m <= 2;
  const I64 era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<I64>(doe) - 719468;
}

// Unix seconds of a date/time value as SQLite's strftime('%s', ...) reads it;
// integers are years (January 1st).
std::optional<I64> epoch_seconds(const Value& v) {
  if (auto* y = as_int(v)) {
    return days_from_civil(*y, policy::kYearMonth, policy::kYearDay) * 86400;
  }
  if (auto* jd = std::get_if<double>(&v)) {
    auto ms = static_cast<I64>(*jd * 86400000.0 + 0.5);
    return ms / 1000 - 210866760000LL;
  }
  const auto* s = std::get_if<std::string>(&v);
  if (!s) return std::nullopt;
  int Y, M, D, h = 0, m = 0;
  double sec = 0;
  char sep = 0;
  int n = std::sscanf(s->c_str(), "%4d-%2d-%2d%c%2d:%2d:%lf", &Y, &M, &D, &sep, &h, &m, &sec);
  if (n < 3 || M < 1 || M > 12 || D < 1 || D > 31) return std::nullopt;
  if (n > 3 && sep != 'T' && sep != ' ') return std::nullopt;
  if (n > 3 && n < 6) return std::nullopt;
  return days_from_civil(Y, static_cast<unsigned>(M), static_cast<unsigned>(D)) * 86400 + h * 3600 + m * 60 +
         static_cast<I64>(sec);
}

Value scalar_op(const std::string& op, const std::vector<Value>& a) {
  if (op == "and" || op == "or") {
    bool is_and = op == "and";
    bool saw_null = false;
    for (const auto& v : a) {
      auto t = as_truth(v);
      if (!t) saw_null = true;
      else if (*t != is_and) return !is_and;
    }
    if (saw_null) return std::monostate{};
    return is_and;
  }
  if (op == "not") {
    auto t = as_truth(a[0]);
    return t ? Value(!*t) : Value(std::monostate{});
  }
  auto cmp = [&](auto pred) -> Value {
    if (is_null(a[0]) || is_null(a[1])) return std::monostate{};
    return pred(compare_values(a[0], a[1]));
  };
  if (op == "exact") return cmp([](int c) { return c == 0; });
  if (op == "greater_than") return cmp([](int c) { return c > 0; });
  if (op == "greater_than_equal") return cmp([](int c) { return c >= 0; });
  if (op == "less_than") return cmp([](int c) { return c < 0; });
  if (op == "less_than_equal") return cmp([](int c) { return c <= 0; });
  if (op == "contains") {
    if (is_null(a[0]) || is_null(a[1])) return std::monostate{};
    return text_of(a[0]).find(text_of(a[1])) != std::string::npos;
  }
  if (op == "add" || op == "subtract" || op == "multiply") {
    char c = op == "add" ? '+' : op == "subtract" ? '-' : '*';
    Value acc = a[0];
    for (std::size_t i = 1; i < a.size(); ++i) acc = binary_arith(acc, a[i], c);
    return acc;
  }
  if (op == "divide") {
    auto first = num(a[0]);
    if (!first) return std::monostate{};
    Value acc = *first;
    for (std::size_t i = 1; i < a.size(); ++i) acc = binary_arith(acc, a[i], '/');
    return acc;
  }
  if (op == "absolute_value") {
    if (auto* i = as_int(a[0])) return *i < 0 ? -*i : *i;
    auto d = num(a[0]);
    return d ? Value(std::abs(*d)) : Value(std::monostate{});
  }
  if (op == "square_root") {
    auto d = num(a[0]);
    if (!d || *d < 0) return std::monostate{};
    return std::sqrt(*d);
  }
  if (op == "percent_change") {
    auto start = num(a[0]);
    if (!start || *start == 0.0) return std::monostate{};
    auto diff = num(binary_arith(a[1], a[0], '-'));
    if (!diff) return std::monostate{};
    return policy::kPercentScale * *diff / *start;
  }
  if (op == "duration") {
    auto s = epoch_seconds(a[0]);
    auto e = epoch_seconds(a[1]);
    if (is_null(a[0]) || is_null(a[1]) || !s || !e) return std::monostate{};
    return *e - *s;
  }
  throw Error(ErrorCode::UnsupportedPattern, "oracle has no semantics for '" + op + "'");
}

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

Value aggregate(const std::string& op, const std::vector<Value>& in, const std::vector<Value>& in2) {
  std::vector<Value> vals;
  for (const auto& v : in) {
    if (!is_null(v)) vals.push_back(v);
  }
  if (op == "count") return static_cast<I64>(vals.size());
  if (op == "count_unique") {
    std::vector<Value> seen;
    for (const auto& v : vals) {
      bool dup = std::any_of(seen.begin(), seen.end(), [&](const Value& s) { return compare_values(s, v) == 0; });
      if (!dup) seen.push_back(v);
    }
    return static_cast<I64>(seen.size());
  }
  if (op == "correlation") {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (is_null(in[i]) || is_null(in2[i])) continue;
      xs.push_back(*num(in[i]));
      ys.push_back(*num(in2[i]));
    }
    if (xs.empty()) return std::monostate{};
    double mx = mean(xs), my = mean(ys);
    std::vector<double> xy, xx, yy;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xy.push_back(xs[i] * ys[i]);
      xx.push_back(xs[i] * xs[i]);
      yy.push_back(ys[i] * ys[i]);
    }
    double vx = std::max(0.0, mean(xx) - mx * mx);
    double vy = std::max(0.0, mean(yy) - my * my);
    double denom = std::sqrt(vx * vy);
    if (denom == 0.0) return std::monostate{};
    return (mean(xy) - mx * my) / denom;
  }
  if (vals.empty()) return std::monostate{};
  if (op == "max" || op == "min" || op == "get_one") {
    Value best = vals.front();
    for (const auto& v : vals) {
      int c = compare_values(v, best);
      if (op == "max" ? c > 0 : c < 0) best = v;
    }
    return best;
  }
  if (op == "sum") {
    I64 acc = 0;
    bool exact = true;
    for (const auto& v : vals) {
      const I64* i = as_int(v);
      if (!i || __builtin_add_overflow(acc, *i, &acc)) {
        exact = false;
        break;
      }
    }
    if (exact) return acc;
    std::vector<double> ds;
    for (const auto& v : vals) ds.push_back(*num(v));
    double s = 0;
    for (double d : ds) s += d;
    return s;
  }
  std::vector<double> ds;
  for (const auto& v : vals) ds.push_back(*num(v));
  if (op == "average") return mean(ds);
  if (op == "standard_deviation") {
    static_assert(policy::kStddevMode == policy::StddevMode::Population);
    std::vector<double> sq;
    for (double d : ds) sq.push_back(d * d);
    double m = mean(ds);
    return std::sqrt(std::max(0.0, mean(sq) - m * m));
  }
  if (op == "median") {
    std::sort(ds.begin(), ds.end());
    std::size_t n = ds.size();
    return n % 2 ? ds[n / 2] : (ds[n / 2 - 1] + ds[n / 2]) / 2.0;
  }
  if (op == "string_aggregation") {
    std::stable_sort(vals.begin(), vals.end(), [](const Value& x, const Value& y) {
      int c = compare_values(x, y);
      return c ? c < 0 : text_of(x) < text_of(y);
    });
    std::string out;
    for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? std::string(policy::kStringAggSeparator) : "") + text_of(vals[i]);
    return out;
  }
  throw Error(ErrorCode::UnsupportedPattern, "oracle has no semantics for aggregation '" + op + "'");
}

// ---- relations ---------------------------------------------------------------------

struct Relation {
  std::vector<ColumnMeta> cols;
  std::vector<std::vector<Value>> rows;
};

struct Row {
  std::vector<const std::vector<Value>*> parts;  // one per table slot, or the single return row
};

struct Source {
  bool base = false;
  std::map<std::string, std::size_t> slot;  // base: table -> slot
  const Relation* rel = nullptr;            // return source
  std::vector<Row> rows;
};

using Rows = std::vector<const Row*>;

struct Ctx {
  std::map<std::string, const Row*> row;
  std::map<std::string, const Rows*> rows;
  const std::map<std::string, Value>* windows = nullptr;
};

struct Spec {
  std::string label;
  bool real = false;
  std::vector<Arg> items;
  std::optional<std::string> filter, sort, limit;
};

struct OutRow {
  std::string key;
  const Row* row = nullptr;  // ungrouped
  bool grouped = false;
  Rows group;                                   // keyed partition of `key`
  std::map<std::string, const Rows*> sources;  // keyless grouping: every source's rows
  std::vector<Value> tie;
  std::map<std::string, Value> windows;

  Ctx ctx() const {
    Ctx c;
    if (row) c.row[key] = row;
    if (grouped && !key.empty()) c.rows[key] = &group;
    for (const auto& [k, r] : sources) c.rows[k] = r;
    c.windows = &windows;
    return c;
  }
};

class Evaluator {
 public:
  Evaluator(const Ring& ring, const MemoryDataset& data, const SqrPlan& plan)
      : ring_(ring), data_(data), plan_(plan), types_(typecheck_plan(ring, plan)) {}

  ResultSet run() {
    const auto& r = plan_.step(plan_.result());
    Spec spec;
    if (r.op == "return") {
      spec = spec_of(r);
    } else if (r.op == "collect") {
      spec.label = r.label;
      spec.items = r.args;
    } else {
      spec.label = r.label;
      spec.items = {StepRef{r.label}};
    }
    Relation rel = evaluate(spec);
    ResultSet rs;
    if (r.op == "return" || r.op == "collect") rs.columns = types_.info(r.label).schema;
    else rs.columns = {types_.info(r.label).column};
    rs.rows = std::move(rel.rows);
    return rs;
  }

 private:
  const SqrStep& step(const Arg& a) const { return plan_.step(ref_label(a)); }

  static std::string lit_string(const Arg& a) { return sql_text(as_literal(a)->value); }

  bool is_agg_op(const std::string& op) const {
    return Registry::builtin().get(op).op_type == OperationType::Aggregation;
  }

  Spec spec_of(const SqrStep& ret) const {
    Spec s;
    s.label = ret.label;
    s.real = true;
    s.items = collect_of(plan_, ret).args;
    for (std::size_t i = 1; i < ret.args.size(); ++i) {
      const auto& m = step(ret.args[i]);
      if (m.op == "sort") s.sort = m.label;
      else if (m.op == "limit") s.limit = m.label;
      else s.filter = m.label;
    }
    return s;
  }

  // ---- classification ----

  bool has_agg(const Arg& a) const {
    if (!is_ref(a)) return false;
    const auto& s = step(a);
    if (s.op == "retrieve_attribute" || s.op == "row_number") return false;
    if (is_agg_op(s.op)) return true;
    return std::any_of(s.args.begin(), s.args.end(), [&](const Arg& x) { return has_agg(x); });
  }

  bool is_window(const Arg& a) const { return is_ref(a) && step(a).op == "row_number"; }

  void sources_of(const Arg& a, std::set<std::string>& out) const {
    if (!is_ref(a)) return;
    const auto& s = step(a);
    if (s.op == "retrieve_attribute") {
      const auto& e = step(s.args[0]);
      out.insert(e.op == "retrieve_entity" ? "base" : "ret:" + e.label);
      return;
    }
    if (s.op == "row_number") {
      const auto& sort = step(s.args[0]);
      for (std::size_t i = 0; i + 1 < sort.args.size(); ++i) sources_of(sort.args[i], out);
      return;
    }
    for (const auto& x : s.args) {
      if (is_ref(x) && step(x).op == "groupby") continue;
      sources_of(x, out);
    }
  }

  std::string single_source(const Arg& a) const {
    std::set<std::string> s;
    sources_of(a, s);
    if (s.size() > 1) throw Error(ErrorCode::UnsupportedPattern, "value mixes sources", ref_label(a));
    return s.empty() ? "" : *s.begin();
  }

  std::string identity(const Arg& a) const {
    if (const auto* l = as_literal(a)) return "literal " + debug_string(l->value);
    const auto& s = step(a);
    if (s.op == "retrieve_attribute") {
      const auto& e = step(s.args[0]);
      std::string owner = e.op == "retrieve_entity" ? "entity " + lit_string(e.args[0]) : "return " + e.label;
      return owner + " / " + lit_string(s.args[1]);
    }
    return "step " + s.label;
  }

  std::vector<Arg> groupby_args(const SqrStep& agg) const {
    std::vector<Arg> out;
    for (const auto& a : agg.args) {
      if (is_ref(a) && step(a).op == "groupby") {
        for (const auto& g : step(a).args) out.push_back(g);
      }
    }
    return out;
  }

  void outer_aggs(const Arg& a, std::vector<const SqrStep*>& out) const {
    if (!is_ref(a)) return;
    const auto& s = step(a);
    if (s.op == "retrieve_attribute") return;
    if (is_agg_op(s.op)) {
      out.push_back(&s);
      return;
    }
    if (s.op == "row_number") {
      const auto& sort = step(s.args[0]);
      for (std::size_t i = 0; i + 1 < sort.args.size(); ++i) outer_aggs(sort.args[i], out);
      return;
    }
    for (const auto& x : s.args) outer_aggs(x, out);
  }

  // ---- sources ----

  const Source& return_source(const std::string& label) {
    auto key = "ret:" + label;
    if (auto it = sources_.find(key); it != sources_.end()) return it->second;
    if (!relations_.count(label)) relations_[label] = evaluate(spec_of(plan_.step(label)));
    Source src;
    src.rel = &relations_.at(label);
    for (const auto& r : src.rel->rows) src.rows.push_back(Row{{&r}});
    return sources_[key] = std::move(src);
  }

  // Entities and base attributes referenced by the scope, outside nested returns.
  void scope_of(const Spec& spec, std::vector<std::string>& ents,
                std::vector<std::pair<std::string, std::string>>& attrs) const {
    std::set<std::string> seen;
    std::function<void(const Arg&)> walk = [&](const Arg& a) {
      if (!is_ref(a) || !seen.insert(ref_label(a)).second) return;
      const auto& s = step(a);
      if (s.op == "return") return;
      if (s.op == "retrieve_attribute") {
        const auto& e = step(s.args[0]);
        if (e.op != "retrieve_entity") return;
        auto en = lit_string(e.args[0]);
        if (std::find(ents.begin(), ents.end(), en) == ents.end()) ents.push_back(en);
        attrs.emplace_back(en, lit_string(s.args[1]));
        return;
      }
      for (const auto& x : s.args) walk(x);
    };
    for (const auto& a : spec.items) walk(a);
    if (spec.filter) walk(StepRef{*spec.filter});
    if (spec.sort) walk(StepRef{*spec.sort});
  }

  Source base_universe(const Spec& spec) const {
    std::vector<std::string> ents;
    std::vector<std::pair<std::string, std::string>> attrs;
    scope_of(spec, ents, attrs);
    std::sort(ents.begin(), ents.end(),
              [&](const auto& a, const auto& b) { return ring_.entity_index(a) < ring_.entity_index(b); });
    Source src;
    src.base = true;
    if (ents.empty()) return src;

    std::vector<const JoinDef*> joins;
    auto add_join = [&](const JoinDef* j) {
      for (const auto* k : joins) {
        if (k->name == j->name) return;
      }
      joins.push_back(j);
    };
    std::vector<std::string> done;
    for (const auto& en : ents) {
      const auto& e = ring_.entity(en);
      if (!done.empty()) {
        const RelationshipDef* rel = nullptr;
        for (const auto& r : ring_.relationships) {
          bool in_from = std::count(done.begin(), done.end(), r.from_entity) > 0;
          bool in_to = std::count(done.begin(), done.end(), r.to_entity) > 0;
          if ((r.to_entity == en && in_from) || (r.from_entity == en && in_to)) {
            rel = &r;
            break;
          }
        }
        if (!rel) throw Error(ErrorCode::NoRelationship, "no relationship reaches " + en);
        for (const auto& j : rel->join_path) add_join(ring_.find_join(j));
      }
      done.push_back(en);
      for (const auto& [an, at] : attrs) {
        if (an != en) continue;
        auto path = shortest_join_path(ring_, e.primary_table, ring_.attribute(an, at).source.front().table);
        if (!path) throw Error(ErrorCode::NoRelationship, "attribute table unreachable", an + "." + at);
        for (const auto* j : *path) add_join(j);
      }
    }

    const auto& anchor = ring_.entity(ents.front()).primary_table;
    src.slot[anchor] = 0;
    for (const auto& r : data_.tables.at(anchor).rows) src.rows.push_back(Row{{&r}});
    // Joins may arrive in any order; apply each once one of its tables is present.
    std::vector<const JoinDef*> pending = joins;
    while (!pending.empty()) {
      auto it = std::find_if(pending.begin(), pending.end(), [&](const JoinDef* j) {
        return src.slot.count(j->left.table) || src.slot.count(j->right.table);
      });
      if (it == pending.end()) throw Error(ErrorCode::NoRelationship, "join graph is disconnected");
      const JoinDef* j = *it;
      pending.erase(it);
      bool have_l = src.slot.count(j->left.table) > 0;
      bool have_r = src.slot.count(j->right.table) > 0;
      const ColumnRef& old_side = have_l ? j->left : j->right;
      const ColumnRef& new_side = have_l ? j->right : j->left;
      std::size_t oc = data_.tables.at(old_side.table).column_index(old_side.column);
      std::size_t nc = data_.tables.at(new_side.table).column_index(new_side.column);
      std::vector<Row> next;
      if (have_l && have_r) {
        for (auto& r : src.rows) {
          if (sql_equal((*r.parts[src.slot[old_side.table]])[oc], (*r.parts[src.slot[new_side.table]])[nc])) {
            next.push_back(r);
          }
        }
      } else {
        std::size_t slot = src.slot.size();
        src.slot[new_side.table] = slot;
        for (const auto& r : src.rows) {
          for (const auto& cand : data_.tables.at(new_side.table).rows) {
            if (sql_equal((*r.parts[src.slot[old_side.table]])[oc], cand[nc])) {
              Row ext = r;
              ext.parts.push_back(&cand);
              next.push_back(std::move(ext));
            }
          }
        }
      }
      src.rows = std::move(next);
    }
    return src;
  }

  // ---- values ----

  Value attribute_at(const SqrStep& s, const Row& row, const Source& src) const {
    const auto& e = step(s.args[0]);
    auto name = lit_string(s.args[1]);
    if (src.base) {
      const auto& ref = ring_.attribute(lit_string(e.args[0]), name).source.front();
      return (*row.parts[src.slot.at(ref.table)])[data_.tables.at(ref.table).column_index(ref.column)];
    }
    for (std::size_t i = 0; i < src.rel->cols.size(); ++i) {
      if (src.rel->cols[i].name == name) return (*row.parts[0])[i];
    }
    throw Error(ErrorCode::MissingColumn, "no column '" + name + "'", s.label);
  }

  Value eval(const Arg& a, const Ctx& ctx) {
    if (const auto* l = as_literal(a)) return l->value;
    const auto& s = step(a);
    if (s.op == "retrieve_attribute") {
      auto key = single_source(a);
      const Source& src = source(key);
      const Row* row = nullptr;
      if (auto it = ctx.row.find(key); it != ctx.row.end()) row = it->second;
      else if (auto jt = ctx.rows.find(key); jt != ctx.rows.end() && !jt->second->empty()) row = jt->second->front();
      if (!row) return std::monostate{};
      return attribute_at(s, *row, src);
    }
    if (s.op == "row_number") return ctx.windows->at(s.label);
    if (is_agg_op(s.op)) return eval_agg(s, ctx);
    std::vector<Value> in;
    for (const auto& x : s.args) in.push_back(eval(x, ctx));
    return scalar_op(s.op, in);
  }

  // Values of `x` across the group, one per row, or one per inner partition
  // when `x` itself aggregates.
  std::vector<Value> series(const Arg& x, const Ctx& ctx) {
    std::vector<Value> out;
    auto key = single_source(x);
    if (key.empty()) {
      out.push_back(eval(x, ctx));
      return out;
    }
    const Rows* rows = ctx.rows.at(key);
    if (!has_agg(x)) {
      for (const auto* r : *rows) {
        Ctx c = ctx;
        c.row[key] = r;
        out.push_back(eval(x, c));
      }
      return out;
    }
    std::vector<const SqrStep*> inner;
    outer_aggs(x, inner);
    std::vector<Arg> keys;
    for (const auto* g : inner) {
      for (const auto& k : groupby_args(*g)) keys.push_back(k);
    }
    for (const auto& part : partition(*rows, key, keys, ctx)) {
      Ctx c = ctx;
      c.row.erase(key);
      c.rows[key] = &part;
      out.push_back(eval(x, c));
    }
    return out;
  }

  std::vector<Rows> partition(const Rows& rows, const std::string& key, const std::vector<Arg>& keys, const Ctx& ctx) {
    std::vector<std::vector<Value>> seen;
    std::vector<Rows> parts;
    for (const auto* r : rows) {
      Ctx c = ctx;
      c.row[key] = r;
      std::vector<Value> kv;
      for (const auto& k : keys) kv.push_back(eval(k, c));
      std::size_t i = 0;
      for (; i < seen.size(); ++i) {
        bool same = true;
        for (std::size_t j = 0; j < kv.size() && same; ++j) same = compare_values(seen[i][j], kv[j]) == 0;
        if (same) break;
      }
      if (i == seen.size()) {
        seen.push_back(kv);
        parts.emplace_back();
      }
      parts[i].push_back(r);
    }
    return parts;
  }

  Value eval_agg(const SqrStep& s, const Ctx& ctx) {
    std::vector<Arg> vals;
    for (const auto& a : s.args) {
      if (!(is_ref(a) && step(a).op == "groupby")) vals.push_back(a);
    }
    auto first = series(vals[0], ctx);
    std::vector<Value> second;
    if (vals.size() > 1) second = series(vals[1], ctx);
    return aggregate(s.op, first, second);
  }

  const Source& source(const std::string& key) {
    if (key == "base") return *current_base_;
    return return_source(key.substr(4));
  }

  // ---- returns ----

  void flatten(const std::string& label, std::vector<std::string>& out) const {
    const auto& s = plan_.step(label);
    if (s.op == "and") {
      for (const auto& a : s.args) flatten(ref_label(a), out);
    } else {
      out.push_back(label);
    }
  }

  std::vector<Value> tie_values(const std::string& key, const Row* row) {
    std::vector<Value> out;
    if (key.empty() || !row) return out;
    const Source& src = source(key);
    if (src.base) {
      std::vector<std::string> ents;
      std::vector<std::pair<std::string, std::string>> attrs;
      scope_of(*current_spec_, ents, attrs);
      std::sort(ents.begin(), ents.end(),
                [&](const auto& a, const auto& b) { return ring_.entity_index(a) < ring_.entity_index(b); });
      for (const auto& en : ents) {
        const auto& ref = ring_.entity(en).identifier()->source.front();
        out.push_back((*row->parts[src.slot.at(ref.table)])[data_.tables.at(ref.table).column_index(ref.column)]);
      }
      return out;
    }
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < src.rel->cols.size(); ++i) {
      if (src.rel->cols[i].types.contains(AttributeType::Identifier)) ids.push_back(i);
    }
    if (ids.empty()) {
      for (std::size_t i = 0; i < src.rel->cols.size(); ++i) ids.push_back(i);
    }
    for (auto i : ids) out.push_back((*row->parts[0])[i]);
    return out;
  }

  static bool less_by(const std::vector<Value>& a, const std::vector<Value>& b, const std::vector<bool>& desc) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      int c = compare_values(a[i], b[i]);
      if (i < desc.size() && desc[i]) c = -c;
      if (c) return c < 0;
    }
    return false;
  }

  void order(std::vector<OutRow>& out, const std::vector<Arg>& keys, bool desc) {
    std::vector<std::vector<Value>> k(out.size());
    std::vector<bool> dirs(keys.size(), desc);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (const auto& a : keys) k[i].push_back(eval(a, out[i].ctx()));
      for (const auto& t : out[i].tie) k[i].push_back(t);
    }
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return less_by(k[x], k[y], dirs); });
    std::vector<OutRow> sorted;
    for (auto i : idx) sorted.push_back(std::move(out[i]));
    out = std::move(sorted);
  }

  Relation evaluate(const Spec& spec) {
    // Nested returns first, so their sources exist before this scope's base.
    std::function<void(const Arg&)> pre = [&](const Arg& a) {
      if (!is_ref(a)) return;
      const auto& s = step(a);
      if (s.op == "retrieve_attribute") {
        const auto& e = step(s.args[0]);
        if (e.op == "return") return_source(e.label);
        return;
      }
      for (const auto& x : s.args) pre(x);
    };
    for (const auto& a : spec.items) pre(a);
    if (spec.filter) pre(StepRef{*spec.filter});
    if (spec.sort) pre(StepRef{*spec.sort});

    Source base = base_universe(spec);
    const Source* saved_base = current_base_;
    const Spec* saved_spec = current_spec_;
    current_base_ = &base;
    current_spec_ = &spec;

    std::vector<std::string> conj;
    if (spec.filter) flatten(*spec.filter, conj);
    std::vector<Arg> sort_keys;
    bool desc = false;
    if (spec.sort) {
      const auto& s = plan_.step(*spec.sort);
      sort_keys.assign(s.args.begin(), s.args.end() - 1);
      desc = std::get<std::string>(as_literal(s.args.back())->value) == "desc";
    }

    std::vector<std::string> row_conj, agg_conj;
    for (const auto& c : conj) (has_agg(StepRef{c}) ? agg_conj : row_conj).push_back(c);
    bool grouped = !agg_conj.empty();
    for (const auto& a : spec.items) grouped |= has_agg(a);
    for (const auto& k : sort_keys) grouped |= has_agg(k);

    // Row filters per source.
    std::set<std::string> keys_used;
    for (const auto& a : spec.items) sources_of(a, keys_used);
    for (const auto& c : conj) sources_of(StepRef{c}, keys_used);
    for (const auto& k : sort_keys) sources_of(k, keys_used);
    std::map<std::string, Rows> filtered;
    for (const auto& key : keys_used) {
      auto& out = filtered[key];
      for (const auto& r : source(key).rows) {
        Ctx c;
        c.row[key] = &r;
        bool keep = true;
        for (const auto& f : row_conj) {
          auto fk = single_source(StepRef{f});
          if (!fk.empty() && fk != key) continue;
          keep = keep && as_truth(eval(StepRef{f}, c)).value_or(false);
        }
        if (keep) out.push_back(&r);
      }
    }

    std::vector<OutRow> out;
    if (!grouped) {
      std::string key;
      for (const auto& a : spec.items) {
        auto k = single_source(a);
        if (!k.empty()) key = k;
      }
      for (const auto& c : conj) {
        auto k = single_source(StepRef{c});
        if (!k.empty()) key = k;
      }
      if (key.empty()) {
        bool keep = true;
        for (const auto& f : row_conj) keep = keep && as_truth(eval(StepRef{f}, Ctx{})).value_or(false);
        if (keep) out.emplace_back();
      } else {
        for (const auto* r : filtered[key]) {
          OutRow o;
          o.key = key;
          o.row = r;
          o.tie = tie_values(key, r);
          out.push_back(std::move(o));
        }
      }
    } else {
      std::vector<Arg> keys;
      std::set<std::string> ids;
      for (const auto& a : spec.items) {
        if (!has_agg(a) && !is_window(a) && single_source(a) != "" && ids.insert(identity(a)).second) keys.push_back(a);
      }
      std::vector<const SqrStep*> tops;
      for (const auto& a : spec.items) outer_aggs(a, tops);
      for (const auto& c : agg_conj) outer_aggs(StepRef{c}, tops);
      for (const auto& k : sort_keys) outer_aggs(k, tops);
      for (const auto* t : tops) {
        for (const auto& g : groupby_args(*t)) {
          if (ids.insert(identity(g)).second) keys.push_back(g);
        }
      }
      if (keys.empty()) {
        OutRow o;
        o.grouped = true;
        for (auto& [k, rows] : filtered) o.sources[k] = &rows;
        out.push_back(std::move(o));
      } else {
        auto key = single_source(keys.front());
        for (auto& part : partition(filtered[key], key, keys, Ctx{})) {
          OutRow o;
          o.key = key;
          o.grouped = true;
          o.group = std::move(part);
          out.push_back(std::move(o));
        }
        for (auto& o : out) {
          for (const auto& k : keys) o.tie.push_back(eval(k, o.ctx()));
        }
      }
      std::vector<OutRow> kept;
      for (auto& o : out) {
        bool keep = true;
        for (const auto& c : agg_conj) keep = keep && as_truth(eval(StepRef{c}, o.ctx())).value_or(false);
        if (keep) kept.push_back(std::move(o));
      }
      out = std::move(kept);
    }
    // Row numbers over the finished row set.
    for (const auto& a : spec.items) {
      if (!is_window(a)) continue;
      const auto& rn = step(a);
      const auto& s = step(rn.args[0]);
      std::vector<Arg> k(s.args.begin(), s.args.end() - 1);
      bool d = std::get<std::string>(as_literal(s.args.back())->value) == "desc";
      std::vector<std::size_t> idx(out.size());
      std::vector<std::vector<Value>> kv(out.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        idx[i] = i;
        for (const auto& x : k) kv[i].push_back(eval(x, out[i].ctx()));
        for (const auto& t : out[i].tie) kv[i].push_back(t);
      }
      std::vector<bool> dirs(k.size(), d);
      std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return less_by(kv[x], kv[y], dirs); });
      for (std::size_t pos = 0; pos < idx.size(); ++pos) out[idx[pos]].windows[rn.label] = static_cast<I64>(pos + 1);
    }

    order(out, sort_keys, desc);
    if (spec.limit) {
      const auto* l = as_literal(plan_.step(*spec.limit).args[0]);
      auto n = static_cast<std::size_t>(std::get<I64>(l->value));
      if (out.size() > n) out.resize(n);
    }

    Relation rel;
    if (spec.real) {
      rel.cols = types_.info(spec.label).schema;
    } else {
      for (const auto& a : spec.items) {
        if (const auto* l = as_literal(a)) rel.cols.push_back({sql_text(l->value), sql_text(l->value), literal_types(*l), std::nullopt});
        else rel.cols.push_back(types_.info(ref_label(a)).column);
      }
    }
    for (auto& o : out) {
      std::vector<Value> row;
      for (std::size_t i = 0; i < spec.items.size(); ++i) {
        Value v = eval(spec.items[i], o.ctx());
        // SQL has no boolean storage: flags surface as 0/1 unless the column is Filter-typed.
        if (auto* b = std::get_if<bool>(&v)) {
          v = rel.cols[i].types.contains(AttributeType::Filter) ? Value(*b) : Value(static_cast<I64>(*b));
        }
        row.push_back(std::move(v));
      }
      rel.rows.push_back(std::move(row));
    }
    current_base_ = saved_base;
    current_spec_ = saved_spec;
    return rel;
  }

  const Ring& ring_;
  const MemoryDataset& data_;
  const SqrPlan& plan_;
  PlanTypes types_;
  std::map<std::string, Relation> relations_;
  std::map<std::string, Source> sources_;
  const Source* current_base_ = nullptr;
  const Spec* current_spec_ = nullptr;
};

}  // namespace

ResultSet oracle_eval(const Ring& ring, const MemoryDataset& data, const SqrPlan& plan) {
  return Evaluator(ring, data, plan).run();
}

}  // namespace aag
