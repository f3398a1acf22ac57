// Acceptance checks: one PASS/FAIL line per criterion.
//
//   aag_acceptance --cli <aag binary> [--suite <test binary>]...
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "aag/llm_client.hpp"
#include "aag/registry.hpp"
#include "aag/typecheck.hpp"
#include "coverage.hpp"

namespace fs = std::filesystem;
using namespace aag;
using namespace aag::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

struct Env {
  fs::path tmp;
  fs::path db;
  Ring ring;
  MemoryDataset data;
  Library lib;
  std::string cli;
  std::vector<std::string> suites;
};

// ---- 1 ------------------------------------------------------------------------------

Outcome oracle_equivalence(const Env& env) {
  auto start = Clock::now();
  auto cases = coverage_cases(env.ring, env.lib);
  auto db = Database::open(env.db);
  std::size_t failed = 0, informative = 0;
  std::string first;
  std::set<std::string> templates;
  for (const auto& c : cases) {
    templates.insert(c.name.substr(0, c.name.find(' ')));
    auto cmp = compare_with_oracle(env.ring, env.data, db, c.plan);
    if (!cmp.ok && failed++ == 0) first = c.name + ": " + cmp.detail;
    bool any = false;
    for (const auto& row : cmp.expected.rows) {
      for (const auto& v : row) any = any || !is_null(v);
    }
    if (any) ++informative;
  }
  double secs = seconds_since(start);
  Outcome o;
  o.pass = failed == 0 && cases.size() >= 40 && templates.size() == env.lib.plans.size() && secs < 10.0;
  o.detail = std::to_string(cases.size() - failed) + "/" + std::to_string(cases.size()) + " plan instances over " +
             std::to_string(templates.size()) + " templates match the oracle in " + fmt_seconds(secs) + " (" +
             std::to_string(informative) + " with non-NULL results)";
  if (failed) o.detail += "; first mismatch: " + first;
  return o;
}

// ---- 2 ------------------------------------------------------------------------------

class TypingCases {
 public:
  explicit TypingCases(const Ring& ring) : ring_(ring) {}

  Outcome run() {
    std::size_t rows = 0, positives = 0, negatives = 0;
    std::vector<std::string> failures;
    for (const auto& sig : Registry::builtin().operations()) {
      ++rows;
      for (bool full : {false, true}) {
        auto plan = build(sig, full, std::nullopt);
        try {
          auto types = typecheck_plan(ring_, plan);
          if (sig.name != "retrieve_attribute" && !(types.types("X") == sig.output)) {
            failures.push_back(sig.name + ": inferred " + types.types("X").str() + ", expected " + sig.output.str());
          }
          ++positives;
        } catch (const Error& e) {
          failures.push_back(sig.name + " positive rejected: " + e.what());
        }
      }
      for (std::size_t g = 0; g < sig.inputs.size(); ++g) {
        auto plan = build(sig, true, g);
        try {
          typecheck_plan(ring_, plan);
          failures.push_back(sig.name + ": wrong type for input group " + std::to_string(g + 1) + " accepted");
        } catch (const Error& e) {
          if (e.code() != ErrorCode::TypeError || e.where() != "X") {
            failures.push_back(sig.name + ": expected TypeError at X, got " + e.what());
          } else {
            ++negatives;
          }
        }
      }
    }
    Outcome o;
    o.pass = failures.empty() && rows == Registry::builtin().operations().size();
    o.detail = std::to_string(rows) + " registry rows, " + std::to_string(positives) + " positive and " +
               std::to_string(negatives) + " negative checks";
    if (!failures.empty()) o.detail += "; " + std::to_string(failures.size()) + " failures, first: " + failures[0];
    return o;
  }

 private:
  std::string fresh() { return "P" + std::to_string(n_++); }

  StepRef add(const std::string& op, std::vector<Arg> args) {
    auto l = fresh();
    plan_.add_step({l, op, std::move(args)});
    return StepRef{l};
  }

  Arg attr(const std::string& name) { return add("retrieve_attribute", {add("retrieve_entity", {make_literal(std::string("Thing"))}), make_literal(name)}); }

  Arg produce(AttributeType t, const std::string& op) {
    using T = AttributeType;
    switch (t) {
      case T::Arithmetic:
      case T::Attribute: return attr("arith");
      case T::Metric: return attr("metric");
      case T::Categorical: return attr("cat");
      case T::Datetime: return attr("dt");
      case T::Document: return attr("doc");
      case T::Identifier: return attr("ident");
      case T::Filter: return add("exact", {attr("cat"), make_literal(std::string("x"))});
      case T::Grouping: return add("groupby", {attr("cat")});
      case T::Sort: return add("sort", {attr("arith"), make_literal(std::string("asc"))});
      case T::Limit: return add("limit", {make_literal(std::int64_t{3})});
      case T::RowNum: return add("row_number", {produce(T::Sort, op)});
      case T::AttributeCollection: return add("collect", {attr("arith")});
      case T::Entity: return add("retrieve_entity", {make_literal(std::string("Thing"))});
      case T::String:
        if (op == "retrieve_entity") return make_literal(std::string("Thing"));
        if (op == "retrieve_attribute") return make_literal(std::string("arith"));
        if (op == "sort") return make_literal(std::string("asc"));
        return make_literal(std::string("x"));
    }
    return make_literal(std::string("x"));
  }

  static AttributeType valid_type(const TypeSet& allowed) {
    // Prefer concrete kinds so the argument is unambiguous.
    for (auto t : allowed.members()) {
      if (t != AttributeType::Attribute) return t;
    }
    return AttributeType::Attribute;
  }

  static AttributeType invalid_type(const OperationSignature& sig, std::size_t g) {
    using T = AttributeType;
    const std::vector<T> pool = {T::Entity, T::AttributeCollection, T::Grouping, T::Sort, T::Limit, T::String,
                                 T::Filter, T::RowNum,  T::Document,   T::Categorical, T::Identifier, T::Arithmetic};
    auto rejected_by = [&](T t, const TypeSet& allowed) { return !accepts(allowed, TypeSet{t}); };
    for (auto t : pool) {
      bool none = true;
      for (const auto& in : sig.inputs) none = none && rejected_by(t, in.allowed);
      if (none) return t;
    }
    for (auto t : pool) {
      if (rejected_by(t, sig.inputs[g].allowed)) return t;
    }
    throw Error(ErrorCode::TypeError, "no rejected type for " + sig.name);
  }

  SqrPlan build(const OperationSignature& sig, bool full, std::optional<std::size_t> wrong_group) {
    plan_ = SqrPlan{};
    n_ = 0;
    std::vector<Arg> args;
    for (std::size_t g = 0; g < sig.inputs.size(); ++g) {
      const auto& in = sig.inputs[g];
      std::size_t count = std::max<std::size_t>(in.arity.min(), (full || wrong_group == g) ? 1 : 0);
      for (std::size_t i = 0; i < count; ++i) {
        auto t = (wrong_group == g && i == 0) ? invalid_type(sig, g) : valid_type(in.allowed);
        args.push_back(produce(t, sig.name));
      }
    }
    plan_.add_step({"X", sig.name, std::move(args)});
    plan_.set_result("X");
    return plan_;
  }

  const Ring& ring_;
  SqrPlan plan_;
  int n_ = 0;
};

Outcome registry_typing() {
  auto ring = derive_attributes(load_ring(source_dir() / "fixtures" / "typing" / "ring.json"));
  return TypingCases(ring).run();
}

// ---- 3 ------------------------------------------------------------------------------

Outcome by_state(const Env& env) {
  auto plan = load_plan(source_dir() / "fixtures" / "plans" / "average_size_by_state.json");
  auto types = typecheck_plan(env.ring, plan);
  bool avg_ok = types.types("H") == TypeSet{AttributeType::Arithmetic, AttributeType::Metric};
  auto subplans = decompose(plan);
  auto db = Database::open(env.db);
  auto cmp = compare_with_oracle(env.ring, env.data, db, plan);
  std::vector<std::string> headers;
  for (const auto& c : cmp.compiled.columns) headers.push_back(c.nicename);
  bool shape = headers == std::vector<std::string>{"state", "average wildfire size"} && cmp.compiled.rows.size() == 2;
  Outcome o;
  o.pass = avg_ok && subplans.size() == 1 && cmp.ok && shape;
  o.detail = "average infers " + types.types("H").str() + ", " + std::to_string(subplans.size()) +
             " subplan(s), columns [" + (headers.empty() ? "" : headers[0] + ", " + headers.back()) + "], " +
             std::to_string(cmp.compiled.rows.size()) + " rows, oracle " + (cmp.ok ? "match" : "MISMATCH " + cmp.detail);
  return o;
}

// ---- 4 ------------------------------------------------------------------------------

Outcome composition(const Env& env) {
  auto req = load_request(env.ring, source_dir() / "fixtures" / "requests" / "ranking_ca_2020.json");
  const auto& bp = env.lib.blueprint(ReportType::Ranking);
  InstantiatedPlan gap;
  for (auto& p : instantiate(bp, env.ring, env.lib, req)) {
    if (p.plan_template == "gap_to_highest") gap = std::move(p);
  }
  const auto& plan = gap.plan;
  const auto& tmpl = env.lib.plans.at("gap_to_highest").plan;

  std::set<std::string> labels;
  bool unique = true;
  for (const auto& s : plan.steps()) unique = unique && labels.insert(s.label).second;
  // Template steps keep their label behind a numeric prefix; references follow.
  std::string prefix;
  for (const auto& s : plan.steps()) {
    if (s.label.size() > 1 && s.label.substr(s.label.size() - 1) == "A" && plan.step(s.label).op == "collect") {
      prefix = s.label.substr(0, s.label.size() - 1);
    }
  }
  bool prefixed = !prefix.empty();
  for (const auto& s : tmpl.steps()) prefixed = prefixed && plan.find(prefix + s.label) != nullptr;
  bool rewired = plan.step(prefix + "B").args.size() == 2 && is_ref(plan.step(prefix + "B").args[0]) &&
                 ref_label(plan.step(prefix + "B").args[0]) == prefix + "A";

  bool acyclic = true, typed = true;
  try {
    topological_order(plan);
  } catch (const Error&) {
    acyclic = false;
  }
  try {
    typecheck_plan(env.ring, plan);
  } catch (const Error&) {
    typed = false;
  }

  // The parts on their own: metric per state under the cohort filter.
  auto parts = parse_plan_text(R"({"format": "sqr_plan_v1", "steps": {
      "A": {"op": "retrieve_entity", "args": ["State"]},
      "B": {"op": "retrieve_attribute", "args": ["|A|", "name"]},
      "C": {"op": "retrieve_entity", "args": ["Wildfire"]},
      "D": {"op": "retrieve_attribute", "args": ["|C|", "size"]},
      "E": {"op": "average", "args": ["|D|"]},
      "F": {"op": "retrieve_attribute", "args": ["|C|", "year"]},
      "G": {"op": "exact", "args": ["|F|", 2020]},
      "H": {"op": "collect", "args": ["|B|", "|E|"]},
      "I": {"op": "return", "args": ["|H|", "|G|"]}}, "result": "I"})");
  auto per_state = oracle_eval(env.ring, env.data, parts);
  double highest = -1e300, target = 0;
  for (const auto& row : per_state.rows) {
    double v = *as_double(row[1]);
    highest = std::max(highest, v);
    if (std::get<std::string>(row[0]) == "California") target = v;
  }
  ResultSet combined{{}, {{highest, target, highest - target}}};
  auto db = Database::open(env.db);
  auto q = compile(env.ring, plan);
  auto got = run_query(db, q);
  combined.columns = got.columns;
  std::string why;
  bool equal = results_match(got, combined, false, 1e-9, &why);
  auto oracle_cmp = compare_with_oracle(env.ring, env.data, db, plan);

  Outcome o;
  o.pass = unique && prefixed && rewired && acyclic && typed && equal && oracle_cmp.ok;
  o.detail = std::to_string(plan.steps().size()) + " steps, labels " + (unique ? "unique" : "DUPLICATED") +
             ", template prefix \"" + prefix + "\" (|A| -> |" + prefix + "A|) " + (rewired ? "rewired" : "NOT rewired") +
             ", " + (acyclic ? "acyclic" : "CYCLIC") + ", " + (typed ? "type-checked" : "TYPE ERROR") +
             ", parts-then-combine " + (equal ? "equal" : "DIFFERENT " + why);
  return o;
}

// ---- 5 ------------------------------------------------------------------------------

Outcome determinism(const Env& env) {
  const std::vector<std::pair<std::string, std::size_t>> expected = {
      {"ranking_ca_2020", 7}, {"benchmark_tx_2020", 6}, {"change_ca", 9}};
  std::vector<std::string> notes;
  bool pass = true;
  for (const auto& [name, count] : expected) {
    auto req = load_request(env.ring, source_dir() / "fixtures" / "requests" / (name + ".json"));
    const auto& bp = env.lib.blueprint(req.report_type);
    std::string first;
    bool same = true, ordered = true;
    std::size_t n = 0;
    for (int run = 0; run < 10; ++run) {
      auto plans = instantiate(bp, env.ring, env.lib, req);
      n = plans.size();
      std::string bytes;
      for (std::size_t i = 0; i < plans.size(); ++i) {
        ordered = ordered && plans[i].requirement == bp.requirements[i].id;
        bytes += plans[i].requirement + "\n" + serialize_plan(plans[i].plan) + "\n";
      }
      if (run == 0) first = bytes;
      same = same && bytes == first;
    }
    pass = pass && n == count && same && ordered;
    notes.push_back(std::string(to_string(req.report_type)) + " " + std::to_string(n) + "/" + std::to_string(count) +
                    (same ? "" : " NONDETERMINISTIC") + (ordered ? "" : " MISORDERED"));
  }
  Outcome o{pass, ""};
  for (const auto& n : notes) o.detail += (o.detail.empty() ? "" : ", ") + n;
  o.detail += "; identical across 10 runs";
  return o;
}

// ---- 6 ------------------------------------------------------------------------------

Outcome goldens(const Env& env) {
  auto req = load_request(env.ring, source_dir() / "fixtures" / "requests" / "ranking_ca_2020.json");
  auto results = run_report(env.ring, env.lib, req);
  std::vector<std::string> lines;
  for (const auto& r : results) lines.push_back(r.statement.text);
  auto text = facts_block(lines, FactMode::Statements);
  auto golden = read_text_file(source_dir() / "fixtures" / "golden" / "ranking_ca_2020.statements.txt");

  std::size_t cross = 0;
  std::vector<std::string> bad;
  for (const auto& r : results) {
    if (r.plan.plan_template != "entity_rank" && r.plan.plan_template != "gap_to_highest" &&
        r.plan.plan_template != "above_average") {
      continue;
    }
    auto expected = oracle_eval(env.ring, env.data, r.plan.plan);
    auto s = render_statement(env.lib.statements.at(r.plan.statement), expected, r.plan.inputs);
    if (s.text == r.statement.text) {
      ++cross;
    } else {
      bad.push_back(r.plan.requirement);
    }
  }
  Outcome o;
  o.pass = results.size() == 7 && text == golden && cross == 3;
  o.detail = std::to_string(results.size()) + " statements, golden " + (text == golden ? "match" : "MISMATCH") + ", " +
             std::to_string(cross) + "/3 oracle cross-checks (rank, gap to highest, above average)";
  for (const auto& b : bad) o.detail += " bad:" + b;
  return o;
}

// ---- 7 ------------------------------------------------------------------------------

std::multiset<std::string> numbers_in(const std::string& s) {
  static const std::regex num(R"(-?\d[\d,]*(\.\d+)?%?)");
  std::multiset<std::string> out;
  for (std::sregex_iterator it(s.begin(), s.end(), num), end; it != end; ++it) out.insert(it->str());
  return out;
}

Outcome ablation_parity(const Env& env) {
  std::size_t checked = 0;
  std::vector<std::string> bad;
  for (const auto* name : {"ranking_ca_2020", "benchmark_tx_2020", "change_ca"}) {
    auto req = load_request(env.ring, source_dir() / "fixtures" / "requests" / (std::string(name) + ".json"));
    for (const auto& r : run_report(env.ring, env.lib, req)) {
      auto sentence = r.statement.text;
      const auto& cond = r.plan.inputs.text.at("conditions");
      if (!cond.empty()) {
        auto pos = sentence.rfind(cond);
        if (pos != std::string::npos) sentence.erase(pos, cond.size());
      }
      // Table body only: headers carry no values.
      auto body = r.table.substr(r.table.find('\n') + 1);
      auto a = numbers_in(sentence), b = numbers_in(body);
      std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
      ++checked;
      if (sa != sb) bad.push_back(std::string(name) + "/" + r.plan.requirement);
    }
  }
  Outcome o;
  o.pass = bad.empty() && checked == 22;
  o.detail = std::to_string(checked - bad.size()) + "/" + std::to_string(checked) +
             " requirements with equal value sets in statements and tables";
  for (const auto& b : bad) o.detail += " mismatch:" + b;
  return o;
}

// ---- 8 ------------------------------------------------------------------------------

int run_cli(const Env& env, const std::string& args) {
  auto cmd = "\"" + env.cli + "\" report generate --ring \"" + (wildfire_dir() / "ring.json").string() +
             "\" --db \"" + env.db.string() + "\" --request \"" +
             (source_dir() / "fixtures" / "requests" / "ranking_ca_2020.json").string() + "\" " + args;
  return std::system(cmd.c_str());
}

Outcome echo_end_to_end(const Env& env) {
  if (env.cli.empty()) return {false, "no --cli binary given"};
  auto report = env.tmp / "report.txt", statements = env.tmp / "statements.txt";
  auto start = Clock::now();
  int rc1 = run_cli(env, "--mode report --backend echo --out \"" + report.string() + "\"");
  double secs = seconds_since(start);
  int rc2 = run_cli(env, "--mode statements --out \"" + statements.string() + "\"");
  if (rc1 != 0 || rc2 != 0) return {false, "cli exit status " + std::to_string(rc1) + "/" + std::to_string(rc2)};
  auto r = read_text_file(report), s = read_text_file(statements);
  auto side = read_text_file(report.string() + ".facts.txt");
  std::size_t lines = 0, found = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) {
    ++lines;
    if (r.find(line) != std::string::npos) ++found;
  }
  Outcome o;
  o.pass = side == s && lines == 7 && found == lines && r.rfind("REPORT:\n", 0) == 0 && secs < 5.0;
  o.detail = std::to_string(found) + "/" + std::to_string(lines) + " facts verbatim in the report, sidecar " +
             (side == s ? "byte-identical" : "DIFFERENT") + " to statements output, pipeline " + fmt_seconds(secs);
  return o;
}

// ---- 9 ------------------------------------------------------------------------------

Outcome reproducibility_statement() {
  auto readme = read_text_file(source_dir() / "README.md");
  bool has = readme.find("## What is and is not verified") != std::string::npos;
  return {has,
          "report-quality figures from hosted-model studies with human annotation are out of scope; "
          "the guarantee checked here is structural (criteria 1-8: every fact in a prompt is oracle-verified). "
          "README section " + std::string(has ? "present" : "MISSING")};
}

// ---- 10 -----------------------------------------------------------------------------

Outcome suite_budget(const Env& env, double own_seconds) {
  auto start = Clock::now();
  std::size_t failed = 0;
  for (const auto& s : env.suites) {
    auto cmd = "\"" + s + "\" > \"" + (env.tmp / "suite.log").string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) ++failed;
  }
  double total = seconds_since(start) + own_seconds;
  bool live = std::getenv("AAG_LIVE_LLM") != nullptr;
  Outcome o;
  o.pass = failed == 0 && total < 60.0 && !env.suites.empty() && !live;
  o.detail = std::to_string(env.suites.size()) + " suites plus acceptance in " + fmt_seconds(total) + ", " +
             std::to_string(failed) + " failing; remote backend tested against a loopback server only" +
             (live ? " (AAG_LIVE_LLM is set: live calls enabled, offline guarantee not checked)" : "");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  auto start = Clock::now();
  Env env;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      env.cli = argv[++i];
    } else if (a == "--suite" && i + 1 < argc) {
      env.suites.push_back(argv[++i]);
    } else {
      std::cerr << "usage: aag_acceptance --cli <aag> [--suite <binary>]...\n";
      return 2;
    }
  }
  env.tmp = fs::temp_directory_path() / ("aag_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(env.tmp);
  env.db = env.tmp / "wildfire.db";

  int failures = 0;
  auto report = [&](int n, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2d: %s - %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };

  try {
    auto base = load_ring(wildfire_dir() / "ring.json");
    load_seed_db(base, wildfire_dir(), env.db);
    env.ring = wildfire_ring(env.db);
    env.data = load_dataset(env.ring, wildfire_dir());
    env.lib = load_library(source_dir());
  } catch (const std::exception& e) {
    std::printf("setup failed: %s\n", e.what());
    return 1;
  }

  report(1, [&] { return oracle_equivalence(env); });
  report(2, [&] { return registry_typing(); });
  report(3, [&] { return by_state(env); });
  report(4, [&] { return composition(env); });
  report(5, [&] { return determinism(env); });
  report(6, [&] { return goldens(env); });
  report(7, [&] { return ablation_parity(env); });
  report(8, [&] { return echo_end_to_end(env); });
  report(9, [&] { return reproducibility_statement(); });
  double own = seconds_since(start);
  report(10, [&] { return suite_budget(env, own); });

  std::error_code ec;
  fs::remove_all(env.tmp, ec);
  return failures == 0 ? 0 : 1;
}
