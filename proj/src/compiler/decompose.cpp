#include <algorithm>
#include <functional>

#include "aag/compiler.hpp"
#include "aag/error.hpp"
#include "aag/registry.hpp"
#include "aag/typecheck.hpp"
#include "lowering.hpp"

namespace aag::detail {

namespace {

enum class Level { Const, Row, Agg, Window };

struct Src {
  enum Kind { None, Base, Block, Cut, Multi } kind = None;
  int block = -1;
  std::string cut;
  bool operator==(const Src&) const = default;
};

struct Shape {
  Level level = Level::Const;
  Src src;
  Src root;
};

struct ReturnSpec {
  std::string label;
  bool real = false;
  std::vector<Arg> items;
  std::vector<std::string> modifiers;  // labels folded into the Return's block
  std::optional<std::string> filter, sort, limit;
};

OperationType op_type(const std::string& op) { return Registry::builtin().get(op).op_type; }

bool is_aggregation(const std::string& op) {
  const auto* sig = Registry::builtin().find(op);
  return sig && sig->op_type == OperationType::Aggregation;
}

[[noreturn]] void unsupported(const std::string& why, const std::string& label) {
  throw Error(ErrorCode::UnsupportedPattern, why, label);
}

class Lowering {
 public:
  explicit Lowering(const SqrPlan& plan) : plan_(plan) {}

  Lowered run() {
    auto spec = root_spec();
    out_.final_block = build_return(spec);
    out_.final_return = spec.real ? spec.label : "";
    out_.final_items = spec.items;
    out_.ordered = spec.sort.has_value();
    out_.blocks[out_.final_block].emit_order = true;
    return std::move(out_);
  }

 private:
  struct Ctx {
    int scope = -1;
    std::map<std::string, Shape> shapes;
    std::map<std::string, Expr> subst;  // keyed by value identity
  };

  // ---- specs -------------------------------------------------------------

  ReturnSpec return_spec(const SqrStep& ret) {
    ReturnSpec spec;
    spec.label = ret.label;
    spec.real = true;
    const auto& collect = collect_of(plan_, ret);
    spec.items = collect.args;
    spec.modifiers = {ret.label, collect.label};
    for (std::size_t i = 1; i < ret.args.size(); ++i) {
      if (!is_ref(ret.args[i])) unsupported("return modifiers must be step references", ret.label);
      const auto& m = plan_.step(ref_label(ret.args[i]));
      if (m.op == "sort") spec.sort = m.label;
      else if (m.op == "limit") spec.limit = m.label;
      else spec.filter = m.label;
    }
    return spec;
  }

  ReturnSpec root_spec() {
    const auto& r = plan_.step(plan_.result());
    if (r.op == "return") return return_spec(r);
    ReturnSpec spec;
    spec.label = r.label;
    if (r.op == "collect") {
      spec.items = r.args;
      spec.modifiers = {r.label};
    } else {
      spec.items = {StepRef{r.label}};
    }
    return spec;
  }

  // ---- identities and traversal -------------------------------------------

  std::string ident(const Arg& a) const {
    if (const auto* l = as_literal(a)) return "l:" + debug_string(l->value);
    const auto& s = plan_.step(ref_label(a));
    if (s.op == "retrieve_attribute") {
      const auto& ent = plan_.step(ref_label(s.args[0]));
      const auto name = sql_text(as_literal(s.args[1])->value);
      if (ent.op == "retrieve_entity") return "b:" + sql_text(as_literal(ent.args[0])->value) + "." + name;
      return "r:" + ent.label + "." + name;
    }
    return "s:" + s.label;
  }

  void collect_scope(const std::vector<Arg>& roots, Scope& scope) {
    std::set<std::string> seen;
    std::function<void(const std::string&)> visit = [&](const std::string& l) {
      if (!seen.insert(l).second) return;
      const auto& s = plan_.step(l);
      if (s.op == "return") return;
      if (s.op == "retrieve_attribute") {
        const auto& ent = plan_.step(ref_label(s.args[0]));
        if (ent.op != "retrieve_entity") return;
        auto e = sql_text(as_literal(ent.args[0])->value);
        auto a = sql_text(as_literal(s.args[1])->value);
        if (std::find(scope.entities.begin(), scope.entities.end(), e) == scope.entities.end()) {
          scope.entities.push_back(e);
        }
        std::pair<std::string, std::string> key{e, a};
        if (std::find(scope.attributes.begin(), scope.attributes.end(), key) == scope.attributes.end()) {
          scope.attributes.push_back(key);
        }
        return;
      }
      for (const auto& r : step_references(s)) visit(r);
    };
    for (const auto& a : roots) {
      if (is_ref(a)) visit(ref_label(a));
    }
  }

  void flatten_and(const std::string& label, std::vector<std::string>& conj, std::vector<std::string>& and_steps) {
    const auto& s = plan_.step(label);
    if (s.op == "and") {
      and_steps.push_back(label);
      for (const auto& a : s.args) {
        if (is_ref(a)) flatten_and(ref_label(a), conj, and_steps);
        else unsupported("literal inside a filter conjunction", label);
      }
      return;
    }
    conj.push_back(label);
  }

  std::vector<Arg> value_args(const SqrStep& s) const {
    std::vector<Arg> out;
    for (const auto& a : s.args) {
      if (is_ref(a) && plan_.step(ref_label(a)).op == "groupby") continue;
      out.push_back(a);
    }
    return out;
  }

  std::vector<std::string> groupby_steps(const SqrStep& s) const {
    std::vector<std::string> out;
    for (const auto& a : s.args) {
      if (is_ref(a) && plan_.step(ref_label(a)).op == "groupby") out.push_back(ref_label(a));
    }
    return out;
  }

  void top_aggs(const Arg& a, std::vector<std::string>& out) const {
    if (!is_ref(a)) return;
    const auto& s = plan_.step(ref_label(a));
    if (is_aggregation(s.op)) {
      if (std::find(out.begin(), out.end(), s.label) == out.end()) out.push_back(s.label);
      return;
    }
    if (s.op == "row_number") {
      const auto& sort = plan_.step(ref_label(s.args[0]));
      for (std::size_t i = 0; i + 1 < sort.args.size(); ++i) top_aggs(sort.args[i], out);
      return;
    }
    auto t = op_type(s.op);
    if (t == OperationType::Boolean || t == OperationType::Arithmetic) {
      for (const auto& x : s.args) top_aggs(x, out);
    }
  }

  // ---- shape analysis --------------------------------------------------------

  Shape shape(const Arg& a, Ctx& ctx) {
    if (!is_ref(a)) return {};
    return shape_of(ref_label(a), ctx);
  }

  Shape shape_of(const std::string& label, Ctx& ctx) {
    if (auto it = ctx.shapes.find(label); it != ctx.shapes.end()) return it->second;
    Shape sh = compute_shape(plan_.step(label), ctx);
    ctx.shapes[label] = sh;
    return sh;
  }

  Shape compute_shape(const SqrStep& s, Ctx& ctx) {
    if (s.op == "retrieve_attribute") {
      const auto& ent = plan_.step(ref_label(s.args[0]));
      if (ent.op == "retrieve_entity") return {Level::Row, {Src::Base}, {Src::Base}};
      if (ent.op != "return") unsupported("attributes can only be retrieved from entities or returns", s.label);
      int b = build_return(return_spec(ent));
      Src src{Src::Block, b, ""};
      return {Level::Row, src, src};
    }
    if (is_aggregation(s.op)) {
      std::vector<Shape> in;
      std::string key;
      for (const auto& a : value_args(s)) {
        auto sh = shape(a, ctx);
        if (sh.level == Level::Const) continue;
        in.push_back(sh);
        key += (key.empty() ? "" : ",") + ref_label(a);
      }
      if (in.empty()) unsupported("aggregation over constants only", s.label);
      Src root = in.front().root;
      for (const auto& sh : in) {
        if (sh.level == Level::Window) unsupported("row numbers cannot be aggregated", s.label);
        if (!(sh.root == root)) unsupported("aggregation inputs come from different sources", s.label);
        if (sh.level != in.front().level) unsupported("aggregation mixes row values and aggregates", s.label);
        if (sh.level == Level::Agg && !(sh.src == root)) unsupported("aggregation nested more than two deep", s.label);
      }
      for (const auto& g : groupby_steps(s)) {
        for (const auto& a : plan_.step(g).args) {
          auto sh = shape(a, ctx);
          if (sh.level != Level::Row || !(sh.root == root)) {
            unsupported("grouping keys must be row values of the aggregated source", s.label);
          }
        }
      }
      if (in.front().level == Level::Row) return {Level::Agg, root, root};
      return {Level::Agg, {Src::Cut, -1, key}, root};
    }
    if (s.op == "row_number") {
      const auto& sort = plan_.step(ref_label(s.args[0]));
      std::vector<Arg> keys(sort.args.begin(), sort.args.end() - 1);
      Shape combined = combine(keys, ctx, s.label);
      if (combined.level == Level::Const) unsupported("row number needs a non-constant sort key", s.label);
      return {Level::Window, combined.src, combined.root};
    }
    auto t = op_type(s.op);
    if (t == OperationType::Boolean || t == OperationType::Arithmetic) return combine(s.args, ctx, s.label);
    unsupported("'" + s.op + "' cannot be used as a value", s.label);
  }

  Shape combine(const std::vector<Arg>& args, Ctx& ctx, const std::string& label) {
    std::vector<Shape> in;
    for (const auto& a : args) {
      auto sh = shape(a, ctx);
      if (sh.level != Level::Const) in.push_back(sh);
    }
    if (in.empty()) return {};
    for (const auto& sh : in) {
      if (sh.level == Level::Window) unsupported("row numbers cannot feed further operations", label);
      if (sh.level != in.front().level) unsupported("operation mixes row values and aggregates", label);
    }
    Shape out = in.front();
    for (const auto& sh : in) {
      if (!(sh.src == out.src)) {
        if (out.level == Level::Row) unsupported("row values come from different sources", label);
        out.src = {Src::Multi};
      }
      if (!(sh.root == out.root)) out.root = {Src::Multi};
    }
    return out;
  }

  // ---- lowering --------------------------------------------------------------

  Expr param(const Literal& l) {
    out_.params.push_back(l);
    Expr e;
    e.kind = Expr::Kind::Param;
    e.param = static_cast<int>(out_.params.size());
    return e;
  }

  Expr lower(const Arg& a, Ctx& ctx, Block& b) {
    if (const auto* l = as_literal(a)) return param(*l);
    if (auto it = ctx.subst.find(ident(a)); it != ctx.subst.end()) {
      b.steps.insert(ref_label(a));
      return it->second;
    }
    const auto& s = plan_.step(ref_label(a));
    b.steps.insert(s.label);
    Expr e;
    if (s.op == "retrieve_attribute") {
      const auto& ent = plan_.step(ref_label(s.args[0]));
      auto name = sql_text(as_literal(s.args[1])->value);
      if (ent.op == "retrieve_entity") {
        b.steps.insert(ent.label);
        e.kind = Expr::Kind::BaseAttr;
        e.entity = sql_text(as_literal(ent.args[0])->value);
        e.attribute = name;
        return e;
      }
      e.kind = Expr::Kind::Column;
      e.block = returns_.at(ent.label);
      auto names = output_column_names(plan_, ent.label);
      e.column = static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
      return e;
    }
    if (s.op == "row_number") {
      const auto& sort = plan_.step(ref_label(s.args[0]));
      b.steps.insert(sort.label);
      e.kind = Expr::Kind::RowNumber;
      e.desc = sort_desc(sort);
      for (std::size_t i = 0; i + 1 < sort.args.size(); ++i) e.args.push_back(lower(sort.args[i], ctx, b));
      return e;
    }
    e.kind = is_aggregation(s.op) ? Expr::Kind::Agg : Expr::Kind::Call;
    e.op = s.op;
    for (const auto& x : is_aggregation(s.op) ? value_args(s) : s.args) e.args.push_back(lower(x, ctx, b));
    for (const auto& g : groupby_steps(s)) b.steps.insert(g);
    return e;
  }

  static bool sort_desc(const SqrStep& sort) {
    return std::get<std::string>(as_literal(sort.args.back())->value) == "desc";
  }

  void set_source(Block& b, const Src& src, int scope) {
    if (src.kind == Src::Base) {
      b.base = true;
      b.scope = scope;
    } else if (src.kind == Src::Block) {
      b.inputs = {src.block};
    }
  }

  int push(Block b) {
    b.index = static_cast<int>(out_.blocks.size());
    out_.blocks.push_back(std::move(b));
    return out_.blocks.back().index;
  }

  void apply_limit(const ReturnSpec& spec, Block& b) {
    if (!spec.limit) return;
    const auto& lim = plan_.step(*spec.limit);
    const auto* l = as_literal(lim.args[0]);
    if (!l) unsupported("limit must be a literal", lim.label);
    b.limit_param = param(*l).param;
    b.emit_order = true;
    b.steps.insert(lim.label);
  }

  void apply_sort(const ReturnSpec& spec, Ctx& ctx, Block& b) {
    if (!spec.sort) return;
    const auto& sort = plan_.step(*spec.sort);
    b.steps.insert(sort.label);
    bool desc = sort_desc(sort);
    for (std::size_t i = 0; i + 1 < sort.args.size(); ++i) b.order.push_back({lower(sort.args[i], ctx, b), desc});
  }

  // Materializes inner aggregates (`key` lists their labels) grouped by their
  // explicit keys plus the outer keys.
  int build_cut(Ctx& ctx, const std::string& key, const std::vector<Arg>& outer_keys, const Src& root,
                const std::vector<std::string>& row_conj) {
    std::vector<Arg> inner;
    for (std::size_t p = 0, q; p <= key.size(); p = q + 1) {
      q = key.find(',', p);
      if (q == std::string::npos) q = key.size();
      inner.push_back(StepRef{key.substr(p, q - p)});
    }
    std::vector<std::string> aggs;
    for (const auto& a : inner) top_aggs(a, aggs);
    std::vector<Arg> keys;
    std::set<std::string> ids;
    for (const auto& g : aggs) {
      for (const auto& gb : groupby_steps(plan_.step(g))) {
        for (const auto& a : plan_.step(gb).args) {
          if (ids.insert(ident(a)).second) keys.push_back(a);
        }
      }
    }
    for (const auto& a : outer_keys) {
      if (ids.insert(ident(a)).second) keys.push_back(a);
    }

    Block c;
    c.grouped = true;
    set_source(c, root, ctx.scope);
    for (const auto& l : row_conj) c.where.push_back(lower(StepRef{l}, ctx, c));
    for (const auto& k : keys) {
      c.group_keys.push_back(lower(k, ctx, c));
      c.outputs.push_back(c.group_keys.back());
      c.output_args.push_back(k);
    }
    for (const auto& v : inner) {
      c.outputs.push_back(lower(v, ctx, c));
      c.output_args.push_back(v);
    }
    c.produces = ref_label(inner.front());
    int idx = push(std::move(c));
    for (std::size_t i = 0; i < out_.blocks[idx].outputs.size(); ++i) {
      Expr col;
      col.kind = Expr::Kind::Column;
      col.block = idx;
      col.column = static_cast<int>(i);
      ctx.subst[ident(out_.blocks[idx].output_args[i])] = col;
    }
    return idx;
  }

  int build_return(const ReturnSpec& spec) {
    if (spec.real) {
      if (auto it = returns_.find(spec.label); it != returns_.end()) return it->second;
    }
    Ctx ctx;
    ctx.scope = static_cast<int>(out_.scopes.size());
    {
      Scope scope;
      scope.label = spec.label;
      std::vector<Arg> roots = spec.items;
      if (spec.filter) roots.push_back(StepRef{*spec.filter});
      if (spec.sort) roots.push_back(StepRef{*spec.sort});
      collect_scope(roots, scope);
      out_.scopes.push_back(std::move(scope));
    }

    std::vector<std::string> conj, and_steps;
    if (spec.filter) flatten_and(*spec.filter, conj, and_steps);
    std::vector<Arg> sort_keys;
    if (spec.sort) {
      const auto& sort = plan_.step(*spec.sort);
      sort_keys.assign(sort.args.begin(), sort.args.end() - 1);
    }

    bool grouped = false;
    std::vector<Shape> item_shapes, conj_shapes;
    for (const auto& a : spec.items) {
      item_shapes.push_back(shape(a, ctx));
      grouped |= item_shapes.back().level == Level::Agg;
    }
    for (const auto& c : conj) {
      conj_shapes.push_back(shape_of(c, ctx));
      grouped |= conj_shapes.back().level == Level::Agg;
      if (conj_shapes.back().level == Level::Window) unsupported("row numbers cannot be filtered in the same return", c);
    }
    for (const auto& k : sort_keys) grouped |= shape(k, ctx).level == Level::Agg;

    int result = grouped ? build_grouped(spec, ctx, conj, conj_shapes, item_shapes, sort_keys)
                         : build_plain(spec, ctx, conj, conj_shapes, item_shapes, sort_keys);
    auto& rb = out_.blocks[result];
    for (const auto& m : spec.modifiers) rb.steps.insert(m);
    for (const auto& m : and_steps) rb.steps.insert(m);
    if (spec.filter) rb.steps.insert(*spec.filter);
    rb.return_label = spec.label;
    rb.produces = spec.label;
    if (spec.real) returns_[spec.label] = result;
    return result;
  }

  int build_plain(const ReturnSpec& spec, Ctx& ctx, const std::vector<std::string>& conj,
                  const std::vector<Shape>& conj_shapes, const std::vector<Shape>& item_shapes,
                  const std::vector<Arg>& sort_keys) {
    std::optional<Src> src;
    auto note = [&](const Shape& sh, const std::string& where) {
      if (sh.level == Level::Const) return;
      if (src && !(*src == sh.src)) unsupported("return mixes rows from different sources", where);
      src = sh.src;
    };
    for (const auto& sh : item_shapes) note(sh, spec.label);
    for (std::size_t i = 0; i < conj.size(); ++i) note(conj_shapes[i], conj[i]);
    for (const auto& k : sort_keys) note(shape(k, ctx), spec.label);

    Block b;
    if (src) set_source(b, *src, ctx.scope);
    for (const auto& c : conj) b.where.push_back(lower(StepRef{c}, ctx, b));
    for (const auto& a : spec.items) {
      b.outputs.push_back(lower(a, ctx, b));
      b.output_args.push_back(a);
    }
    apply_sort(spec, ctx, b);
    apply_limit(spec, b);
    return push(std::move(b));
  }

  int build_grouped(const ReturnSpec& spec, Ctx& ctx, const std::vector<std::string>& conj,
                    const std::vector<Shape>& conj_shapes, const std::vector<Shape>& item_shapes,
                    const std::vector<Arg>& sort_keys) {
    std::vector<std::string> aggs;
    for (const auto& a : spec.items) top_aggs(a, aggs);
    for (std::size_t i = 0; i < conj.size(); ++i) {
      if (conj_shapes[i].level == Level::Agg) top_aggs(StepRef{conj[i]}, aggs);
    }
    for (const auto& k : sort_keys) top_aggs(k, aggs);

    std::vector<Arg> keys;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < spec.items.size(); ++i) {
      if (item_shapes[i].level == Level::Row && ids.insert(ident(spec.items[i])).second) keys.push_back(spec.items[i]);
    }
    for (const auto& g : aggs) {
      for (const auto& gb : groupby_steps(plan_.step(g))) {
        for (const auto& a : plan_.step(gb).args) {
          if (ids.insert(ident(a)).second) keys.push_back(a);
        }
      }
    }

    std::vector<Src> srcs;
    for (const auto& g : aggs) {
      auto s = shape_of(g, ctx).src;
      if (std::find(srcs.begin(), srcs.end(), s) == srcs.end()) srcs.push_back(s);
    }

    std::vector<std::string> row_conj, agg_conj;
    std::vector<Src> row_conj_src;
    for (std::size_t i = 0; i < conj.size(); ++i) {
      if (conj_shapes[i].level == Level::Agg) {
        agg_conj.push_back(conj[i]);
      } else {
        row_conj.push_back(conj[i]);
        row_conj_src.push_back(conj_shapes[i].src);
      }
    }
    auto conj_over = [&](const Src& root) {
      std::vector<std::string> out;
      for (std::size_t i = 0; i < row_conj.size(); ++i) {
        if (row_conj_src[i].kind == Src::None || row_conj_src[i] == root) out.push_back(row_conj[i]);
      }
      return out;
    };
    auto root_of = [&](const Src& s) {
      for (const auto& g : aggs) {
        auto sh = shape_of(g, ctx);
        if (sh.src == s) return sh.root;
      }
      return s;
    };

    // SQLite rejects HAVING without GROUP BY, so an ungrouped aggregate filter
    // goes through the combine path instead.
    if (srcs.size() == 1 && !(keys.empty() && !agg_conj.empty())) {
      const Src s = srcs.front();
      const Src root = root_of(s);
      for (const auto& k : keys) {
        if (!(shape(k, ctx).root == root)) unsupported("grouping key comes from a different source", spec.label);
      }
      for (const auto& rs : row_conj_src) {
        if (rs.kind != Src::None && !(rs == root)) unsupported("filter refers to an unrelated source", spec.label);
      }
      for (const auto& c : agg_conj) {
        if (!(shape_of(c, ctx).src == s)) unsupported("aggregate filter refers to another source", c);
      }
      Block b;
      b.grouped = true;
      if (s.kind == Src::Cut) {
        int c = build_cut(ctx, s.cut, keys, root, conj_over(root));
        b.inputs = {c};
      } else {
        set_source(b, s, ctx.scope);
        for (const auto& c : conj_over(root)) b.where.push_back(lower(StepRef{c}, ctx, b));
      }
      for (const auto& k : keys) b.group_keys.push_back(lower(k, ctx, b));
      for (const auto& a : spec.items) {
        b.outputs.push_back(lower(a, ctx, b));
        b.output_args.push_back(a);
      }
      for (const auto& c : agg_conj) b.having.push_back(lower(StepRef{c}, ctx, b));
      apply_sort(spec, ctx, b);
      apply_limit(spec, b);
      return push(std::move(b));
    }

    if (!keys.empty()) unsupported("grouped return combines aggregates from several sources", spec.label);
    for (const auto& sh : item_shapes) {
      if (sh.level == Level::Window) unsupported("row number over aggregates from several sources", spec.label);
    }
    std::vector<Src> roots;
    for (const auto& s : srcs) roots.push_back(root_of(s));
    for (const auto& rs : row_conj_src) {
      if (rs.kind != Src::None && std::find(roots.begin(), roots.end(), rs) == roots.end()) {
        unsupported("filter refers to an unrelated source", spec.label);
      }
    }
    std::vector<int> parts;
    for (std::size_t i = 0; i < srcs.size(); ++i) {
      const Src& s = srcs[i];
      Block p;
      p.grouped = true;
      if (s.kind == Src::Cut) {
        p.inputs = {build_cut(ctx, s.cut, {}, roots[i], conj_over(roots[i]))};
      } else {
        set_source(p, s, ctx.scope);
        for (const auto& c : conj_over(roots[i])) p.where.push_back(lower(StepRef{c}, ctx, p));
      }
      std::vector<std::string> mine;
      for (const auto& g : aggs) {
        if (shape_of(g, ctx).src == s) mine.push_back(g);
      }
      for (const auto& g : mine) {
        p.outputs.push_back(lower(StepRef{g}, ctx, p));
        p.output_args.push_back(StepRef{g});
      }
      p.produces = mine.front();
      int idx = push(std::move(p));
      parts.push_back(idx);
      for (std::size_t j = 0; j < mine.size(); ++j) {
        Expr col;
        col.kind = Expr::Kind::Column;
        col.block = idx;
        col.column = static_cast<int>(j);
        ctx.subst[ident(StepRef{mine[j]})] = col;
      }
    }
    Block r;
    r.inputs = parts;
    for (const auto& a : spec.items) {
      r.outputs.push_back(lower(a, ctx, r));
      r.output_args.push_back(a);
    }
    for (const auto& c : agg_conj) r.where.push_back(lower(StepRef{c}, ctx, r));
    apply_sort(spec, ctx, r);
    apply_limit(spec, r);
    return push(std::move(r));
  }

  const SqrPlan& plan_;
  Lowered out_;
  std::map<std::string, int> returns_;
};

}  // namespace

Lowered lower_plan(const SqrPlan& plan) {
  topological_order(plan);
  return Lowering(plan).run();
}

}  // namespace aag::detail

namespace aag {

std::vector<Subplan> decompose(const SqrPlan& plan) {
  auto lowered = detail::lower_plan(plan);
  std::vector<Subplan> out;
  std::map<std::string, std::size_t> owner;
  for (const auto& b : lowered.blocks) {
    Subplan sp;
    sp.id = static_cast<std::size_t>(b.index) + 1;
    sp.produces = b.produces;
    for (int in : b.inputs) sp.consumes.push_back(static_cast<std::size_t>(in) + 1);
    if (b.base) {
      sp.entities = lowered.scopes[b.scope].entities;
      sp.attributes = lowered.scopes[b.scope].attributes;
    }
    // Column references to upstream blocks also count as consumption.
    std::function<void(const detail::Expr&)> scan = [&](const detail::Expr& e) {
      if (e.kind == detail::Expr::Kind::Column) {
        auto id = static_cast<std::size_t>(e.block) + 1;
        if (id != sp.id && std::find(sp.consumes.begin(), sp.consumes.end(), id) == sp.consumes.end()) {
          sp.consumes.push_back(id);
        }
      }
      for (const auto& a : e.args) scan(a);
    };
    for (const auto& e : b.outputs) scan(e);
    for (const auto& e : b.where) scan(e);
    for (const auto& l : b.steps) owner.emplace(l, out.size());
    out.push_back(std::move(sp));
  }
  // Steps never lowered directly (e.g. entity retrievals) join their first consumer.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& s : plan.steps()) {
      if (owner.count(s.label)) continue;
      for (const auto& c : plan.steps()) {
        auto refs = step_references(c);
        if (owner.count(c.label) && std::find(refs.begin(), refs.end(), s.label) != refs.end()) {
          owner[s.label] = owner[c.label];
          changed = true;
          break;
        }
      }
    }
  }
  for (const auto& s : plan.steps()) {
    auto it = owner.find(s.label);
    out[it == owner.end() ? out.size() - 1 : it->second].steps.push_back(s.label);
  }
  return out;
}

}  // namespace aag
