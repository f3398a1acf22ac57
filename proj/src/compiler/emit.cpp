#include <algorithm>
#include <functional>

#include "aag/compiler.hpp"
#include "aag/error.hpp"
#include "aag/policy.hpp"
#include "aag/typecheck.hpp"
#include "lowering.hpp"

namespace aag {

namespace {

using detail::Block;
using detail::Expr;

std::string quote(const std::string& id) {
  std::string out = "\"";
  for (char c : id) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string epoch(const std::string& x) {
  return "CAST(strftime('%s', CASE WHEN typeof(" + x + ") = 'integer' THEN printf('%04d-01-01', " + x +
         ") ELSE " + x + " END) AS INTEGER)";
}

class Emitter {
 public:
  Emitter(const Ring& ring, const SqrPlan& plan) : ring_(ring), plan_(plan) {}

  CompiledQuery run() {
    types_ = typecheck_plan(ring_, plan_);
    low_ = detail::lower_plan(plan_);
    for (const auto& b : low_.blocks) metas_.push_back(block_metas(b));

    std::vector<std::string> ctes;
    std::string main;
    for (const auto& b : low_.blocks) {
      helpers_.clear();
      std::string body = emit_block(b);
      for (auto& h : helpers_) ctes.push_back(std::move(h));
      if (b.index == low_.final_block) main = body;
      else ctes.push_back(name(b.index) + " AS (" + body + ")");
    }
    CompiledQuery q;
    q.sql = ctes.empty() ? main : "WITH " + join(ctes, ",\n") + "\n" + main;
    for (const auto& p : low_.params) q.params.push_back(p.value);
    q.output_columns = final_columns();
    q.ordered = low_.ordered;
    return q;
  }

 private:
  static std::string name(int block) { return "sp" + std::to_string(block + 1); }

  ColumnMeta arg_meta(const Arg& a) const {
    if (const auto* l = as_literal(a)) return {sql_text(l->value), sql_text(l->value), literal_types(*l), std::nullopt};
    return types_.info(ref_label(a)).column;
  }

  std::vector<ColumnMeta> block_metas(const Block& b) const {
    std::vector<ColumnMeta> out;
    for (const auto& a : b.output_args) out.push_back(arg_meta(a));
    return out;
  }

  std::vector<ColumnMeta> final_columns() const {
    const auto& r = plan_.step(plan_.result());
    if (r.op == "return" || r.op == "collect") return types_.info(r.label).schema;
    return {types_.info(r.label).column};
  }

  // ---- FROM ------------------------------------------------------------------

  struct From {
    std::string sql;  // including leading " FROM", may be empty
    std::map<std::string, std::string> alias;  // table -> alias
    std::vector<std::string> extra_where;
  };

  From build_from(const Block& b) const {
    From f;
    if (b.base) {
      const auto& scope = low_.scopes[b.scope];
      Subplan sp;
      sp.id = static_cast<std::size_t>(b.index) + 1;
      sp.entities = scope.entities;
      sp.attributes = scope.attributes;
      auto res = resolve_joins(ring_, sp);
      for (std::size_t i = 0; i < res.required_tables.size(); ++i) {
        f.alias[res.required_tables[i]] = "t" + std::to_string(i);
      }
      std::vector<std::string> placed{res.required_tables.front()};
      f.sql = " FROM " + quote(placed.front()) + " AS t0";
      auto col = [&](const ColumnRef& c) { return f.alias[c.table] + "." + quote(c.column); };
      for (const auto& rj : res.join_sequence) {
        const auto& j = rj.join;
        bool has_l = std::find(placed.begin(), placed.end(), j.left.table) != placed.end();
        bool has_r = std::find(placed.begin(), placed.end(), j.right.table) != placed.end();
        std::string cond = col(j.left) + " = " + col(j.right);
        if (has_l && has_r) {
          f.extra_where.push_back(cond);
          continue;
        }
        const auto& t = has_l ? j.right.table : j.left.table;
        placed.push_back(t);
        f.sql += " JOIN " + quote(t) + " AS " + f.alias[t] + " ON " + cond;
      }
    } else if (!b.inputs.empty()) {
      std::vector<std::string> parts;
      for (std::size_t i = 0; i < b.inputs.size(); ++i) parts.push_back(name(b.inputs[i]) + " AS b" + std::to_string(i));
      f.sql = " FROM " + join(parts, " CROSS JOIN ");
    }
    return f;
  }

  // ---- expressions -------------------------------------------------------------

  struct Ctx {
    const Block& b;
    const From& from;
    std::string where;  // rendered WHERE clause, reused by helper CTEs
    std::vector<std::string> keys;
  };

  std::string expr(const Expr& e, Ctx& c) {
    switch (e.kind) {
      case Expr::Kind::Param:
        return "?" + std::to_string(e.param);
      case Expr::Kind::BaseAttr: {
        const auto& src = ring_.attribute(e.entity, e.attribute).source.front();
        return c.from.alias.at(src.table) + "." + quote(src.column);
      }
      case Expr::Kind::Column: {
        auto pos = std::find(c.b.inputs.begin(), c.b.inputs.end(), e.block) - c.b.inputs.begin();
        return "b" + std::to_string(pos) + ".c" + std::to_string(e.column);
      }
      case Expr::Kind::RowNumber: {
        std::vector<std::string> ord;
        for (const auto& k : e.args) ord.push_back(direction(expr(k, c), e.desc));
        for (const auto& t : tie_break(c)) ord.push_back(t);
        return "ROW_NUMBER() OVER (ORDER BY " + join(ord, ", ") + ")";
      }
      case Expr::Kind::Agg:
        return aggregate(e, c);
      case Expr::Kind::Call:
        return call(e, c);
    }
    return "NULL";
  }

  static std::string direction(const std::string& x, bool desc) {
    // SQLite already places NULL lowest in both directions.
    static_assert(policy::kNullsSortFirst);
    return x + (desc ? " DESC" : " ASC");
  }

  std::vector<std::string> args(const Expr& e, Ctx& c) {
    std::vector<std::string> out;
    for (const auto& a : e.args) out.push_back(expr(a, c));
    return out;
  }

  std::string call(const Expr& e, Ctx& c) {
    auto a = args(e, c);
    const auto& op = e.op;
    if (op == "and") return "(" + join(a, " AND ") + ")";
    if (op == "or") return "(" + join(a, " OR ") + ")";
    if (op == "not") return "(NOT " + a[0] + ")";
    if (op == "exact") return "(" + a[0] + " = " + a[1] + ")";
    if (op == "greater_than") return "(" + a[0] + " > " + a[1] + ")";
    if (op == "greater_than_equal") return "(" + a[0] + " >= " + a[1] + ")";
    if (op == "less_than") return "(" + a[0] + " < " + a[1] + ")";
    if (op == "less_than_equal") return "(" + a[0] + " <= " + a[1] + ")";
    if (op == "contains") return "(instr(CAST(" + a[0] + " AS TEXT), CAST(" + a[1] + " AS TEXT)) > 0)";
    if (op == "add") return "(" + join(a, " + ") + ")";
    if (op == "subtract") return "(" + join(a, " - ") + ")";
    if (op == "multiply") return "(" + join(a, " * ") + ")";
    if (op == "divide") {
      a[0] = "CAST(" + a[0] + " AS REAL)";
      return "(" + join(a, " / ") + ")";
    }
    if (op == "absolute_value") return "abs(" + a[0] + ")";
    if (op == "square_root") return "sqrt(" + a[0] + ")";
    if (op == "percent_change") {
      char scale[32];
      std::snprintf(scale, sizeof scale, "%.1f", policy::kPercentScale);
      return "(" + std::string(scale) + " * (" + a[1] + " - " + a[0] + ") / NULLIF(" + a[0] + ", 0))";
    }
    if (op == "duration") return "(" + epoch(a[1]) + " - " + epoch(a[0]) + ")";
    throw Error(ErrorCode::UnsupportedPattern, "no SQL form for '" + op + "'");
  }

  std::string aggregate(const Expr& e, Ctx& c) {
    const auto& op = e.op;
    if (op == "median" || op == "string_aggregation") return helper(e, c);
    auto a = args(e, c);
    if (op == "average") return "AVG(" + a[0] + ")";
    if (op == "count") return "COUNT(" + a[0] + ")";
    if (op == "count_unique") return "COUNT(DISTINCT " + a[0] + ")";
    if (op == "sum") return "SUM(" + a[0] + ")";
    if (op == "max") return "MAX(" + a[0] + ")";
    if (op == "min" || op == "get_one") return "MIN(" + a[0] + ")";
    if (op == "standard_deviation") {
      return "sqrt(max(0.0, AVG(CAST(" + a[0] + " AS REAL) * " + a[0] + ") - AVG(" + a[0] + ") * AVG(" + a[0] + ")))";
    }
    if (op == "correlation") {
      std::string both = a[0] + " IS NOT NULL AND " + a[1] + " IS NOT NULL";
      auto avg = [&](const std::string& x) { return "AVG(CASE WHEN " + both + " THEN " + x + " END)"; };
      std::string ma = avg(a[0]), mb = avg(a[1]);
      std::string cov = "(" + avg("CAST(" + a[0] + " AS REAL) * " + a[1]) + " - " + ma + " * " + mb + ")";
      std::string va = "max(0.0, " + avg("CAST(" + a[0] + " AS REAL) * " + a[0]) + " - " + ma + " * " + ma + ")";
      std::string vb = "max(0.0, " + avg("CAST(" + a[1] + " AS REAL) * " + a[1]) + " - " + mb + " * " + mb + ")";
      return "(" + cov + " / NULLIF(sqrt(" + va + " * " + vb + "), 0))";
    }
    throw Error(ErrorCode::UnsupportedPattern, "no SQL form for aggregation '" + op + "'");
  }

  // Median and ordered string aggregation run in a helper CTE over the same
  // rows, correlated back on the group keys.
  std::string helper(const Expr& e, Ctx& c) {
    std::string x = expr(e.args[0], c);
    std::string id = name(c.b.index) + (e.op == "median" ? "_m" : "_s") + std::to_string(helpers_.size() + 1);
    std::vector<std::string> key_cols, match;
    for (std::size_t i = 0; i < c.keys.size(); ++i) {
      key_cols.push_back(c.keys[i] + " AS k" + std::to_string(i));
      match.push_back("h.k" + std::to_string(i) + " IS " + c.keys[i]);
    }
    std::string where = c.where.empty() ? " WHERE " : c.where + " AND ";
    where += x + " IS NOT NULL";
    std::string select_keys = key_cols.empty() ? "" : join(key_cols, ", ") + ", ";
    std::string correlate = match.empty() ? "" : " WHERE " + join(match, " AND ");
    if (e.op == "median") {
      std::vector<std::string> kn;
      for (std::size_t i = 0; i < c.keys.size(); ++i) kn.push_back("k" + std::to_string(i));
      std::string part = kn.empty() ? "" : "PARTITION BY " + join(c.keys, ", ") + " ";
      std::string inner = "SELECT " + select_keys + x + " AS v, ROW_NUMBER() OVER (" + part + "ORDER BY " + x +
                          ") AS rn, COUNT(*) OVER (" + (kn.empty() ? "" : "PARTITION BY " + join(c.keys, ", ")) +
                          ") AS cnt" + c.from.sql + where;
      std::string group = kn.empty() ? "" : " GROUP BY " + join(kn, ", ");
      helpers_.push_back(id + " AS (SELECT " + (kn.empty() ? "" : join(kn, ", ") + ", ") + "AVG(v) AS v FROM (" +
                         inner + ") WHERE rn IN ((cnt + 1) / 2, (cnt + 2) / 2)" + group + ")");
      return collapse("(SELECT h.v FROM " + id + " AS h" + correlate + ")", c);
    }
    helpers_.push_back(id + " AS (SELECT " + select_keys + x + " AS o, CAST(" + x + " AS TEXT) AS v" + c.from.sql +
                       where + ")");
    return collapse("(SELECT group_concat(s.v, '" + std::string(policy::kStringAggSeparator) +
                        "') FROM (SELECT h.v FROM " + id + " AS h" + correlate + " ORDER BY h.o, h.v) AS s)",
                    c);
  }

  // Without keys nothing else may aggregate the block down to one row, so the
  // helper value goes through an aggregate of its own.
  static std::string collapse(const std::string& sub, const Ctx& c) {
    return c.keys.empty() ? "MAX(" + sub + ")" : sub;
  }

  // ---- blocks --------------------------------------------------------------------

  std::vector<std::string> tie_break(Ctx& c) {
    std::vector<std::string> out;
    if (c.b.grouped) {
      for (const auto& k : c.keys) out.push_back(k + " ASC");
      return out;
    }
    if (c.b.base) {
      auto ents = low_.scopes[c.b.scope].entities;
      std::sort(ents.begin(), ents.end(),
                [&](const auto& x, const auto& y) { return ring_.entity_index(x) < ring_.entity_index(y); });
      for (const auto& en : ents) {
        const auto* id = ring_.entity(en).identifier();
        const auto& src = id->source.front();
        out.push_back(c.from.alias.at(src.table) + "." + quote(src.column) + " ASC");
      }
      return out;
    }
    std::vector<std::string> ids, all;
    for (std::size_t i = 0; i < c.b.inputs.size(); ++i) {
      const auto& m = metas_[c.b.inputs[i]];
      for (std::size_t j = 0; j < m.size(); ++j) {
        auto col = "b" + std::to_string(i) + ".c" + std::to_string(j) + " ASC";
        all.push_back(col);
        if (m[j].types.contains(AttributeType::Identifier)) ids.push_back(col);
      }
    }
    return ids.empty() ? all : ids;
  }

  std::string emit_block(const Block& b) {
    From from = build_from(b);
    Ctx c{b, from, "", {}};
    std::vector<std::string> where = from.extra_where;
    for (const auto& w : b.where) where.push_back(expr(w, c));
    if (!where.empty()) c.where = " WHERE " + join(where, " AND ");
    for (const auto& k : b.group_keys) c.keys.push_back(expr(k, c));

    std::vector<std::string> cols;
    for (std::size_t i = 0; i < b.outputs.size(); ++i) cols.push_back(expr(b.outputs[i], c) + " AS c" + std::to_string(i));
    std::string sql = "SELECT " + join(cols, ", ") + from.sql + c.where;
    if (b.grouped && !c.keys.empty()) sql += " GROUP BY " + join(c.keys, ", ");
    if (!b.having.empty()) {
      std::vector<std::string> h;
      for (const auto& x : b.having) h.push_back(expr(x, c));
      sql += " HAVING " + join(h, " AND ");
    }
    if (b.emit_order) {
      std::vector<std::string> ord;
      for (const auto& o : b.order) ord.push_back(direction(expr(o.expr, c), o.desc));
      for (const auto& t : tie_break(c)) ord.push_back(t);
      if (!ord.empty()) sql += " ORDER BY " + join(ord, ", ");
    }
    if (b.limit_param > 0) sql += " LIMIT ?" + std::to_string(b.limit_param);
    return sql;
  }

  const Ring& ring_;
  const SqrPlan& plan_;
  PlanTypes types_;
  detail::Lowered low_;
  std::vector<std::vector<ColumnMeta>> metas_;
  std::vector<std::string> helpers_;
};

}  // namespace

CompiledQuery compile(const Ring& ring, const SqrPlan& plan) { return Emitter(ring, plan).run(); }

}  // namespace aag
