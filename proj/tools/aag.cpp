// aag command-line tool.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "aag/blueprints.hpp"
#include "aag/llm_client.hpp"
#include "aag/sqlite_db.hpp"
#include "aag/typecheck.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;  // bad flags, files, requests or plans
constexpr int kRuntime = 2;  // database, rendering or LLM failures

int exit_code(aag::ErrorCode c) {
  using aag::ErrorCode;
  switch (c) {
    case ErrorCode::UnsupportedPattern:
    case ErrorCode::DbError:
    case ErrorCode::MissingColumn:
    case ErrorCode::UnexpectedRowCount:
    case ErrorCode::EmptyFacts:
    case ErrorCode::HttpError:
    case ErrorCode::TimeoutError:
    case ErrorCode::AuthError:
    case ErrorCode::IoError:
      return kRuntime;
    default:
      return kInvalid;
  }
}

// Per-stage timing on stderr under --verbose: "stage=<name> ms=<elapsed>".
class StageTimer {
 public:
  explicit StageTimer(bool on) : on_(on), last_(std::chrono::steady_clock::now()) {}
  void mark(const char* stage) {
    auto now = std::chrono::steady_clock::now();
    if (on_) {
      auto ms = std::chrono::duration<double, std::milli>(now - last_).count();
      std::fprintf(stderr, "stage=%s ms=%.1f\n", stage, ms);
    }
    last_ = now;
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point last_;
};

struct Options {
  std::string ring, plan, request, csv_dir, out, db;
  std::string mode = "statements";
  std::string backend = "echo";
  std::string profile = "remote";
  std::string data_dir;
  unsigned workers = 4;
  bool sql = false;
  bool verbose = false;
};

aag::Ring open_ring(const Options& o) {
  auto ring = aag::load_ring(o.ring);
  auto violations = aag::validate_ring(ring);
  if (!violations.empty()) throw aag::ValidationError(std::move(violations));
  ring = aag::derive_attributes(ring);
  if (!o.db.empty()) ring.db = "sqlite://" + std::filesystem::absolute(o.db).string();
  return ring;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
  } else {
    aag::write_file_atomic(o.out, text);
  }
}

std::string data_dir(const Options& o) {
  if (!o.data_dir.empty()) return o.data_dir;
  if (const char* d = std::getenv("AAG_DATA_DIR")) return d;
  return AAG_DEFAULT_DATA_DIR;
}

int ring_validate(const Options& o) {
  auto ring = aag::load_ring(o.ring);
  auto violations = aag::validate_ring(ring);
  for (const auto& v : violations) std::cout << v.code << " " << v.path << ": " << v.message << "\n";
  if (!violations.empty()) return kInvalid;
  auto derived = aag::derive_attributes(ring);
  std::size_t attrs = 0;
  for (const auto& e : derived.entities) attrs += e.attributes.size();
  std::cout << "ok: " << derived.entities.size() << " entities, " << attrs << " attributes (with derived)\n";
  return kOk;
}

int plan_run(const Options& o) {
  auto ring = open_ring(o);
  auto plan = aag::load_plan(o.plan);
  auto q = aag::compile(ring, plan);
  if (o.sql || o.verbose) std::cerr << q.sql << "\n";
  auto db = aag::Database::open(aag::sqlite_path(ring));
  emit(o, aag::render_table(aag::run_query(db, q)) + "\n");
  return kOk;
}

int db_load(const Options& o) {
  auto ring = aag::load_ring(o.ring);
  auto out = o.out.empty() ? aag::sqlite_path(ring) : std::filesystem::path(o.out);
  aag::load_seed_db(ring, o.csv_dir, out);
  std::cerr << "wrote " << out.string() << "\n";
  return kOk;
}

int report_generate(const Options& o) {
  StageTimer timer(o.verbose);
  if (o.mode == "report" && o.backend == "remote" && !std::getenv("AAG_API_KEY")) {
    throw aag::ValidationError("--backend", "the remote backend needs AAG_API_KEY in the environment");
  }
  auto ring = open_ring(o);
  timer.mark("load_ring");
  auto lib = aag::load_library(data_dir(o));
  timer.mark("load_library");
  auto req = aag::load_request(ring, o.request);
  const auto& bp = lib.blueprint(req.report_type);
  timer.mark("parse_request");

  if (o.mode == "plans") {
    aag::Json doc = aag::Json::array();
    for (const auto& p : aag::instantiate(bp, ring, lib, req)) {
      doc.push_back({{"requirement", p.requirement}, {"plan_template", p.plan_template},
                     {"plan", aag::plan_to_json(p.plan)}});
    }
    emit(o, doc.dump(2) + "\n");
    return kOk;
  }

  auto results = aag::run_report(ring, lib, req, o.workers);
  timer.mark("execute");
  if (o.verbose) {
    for (const auto& r : results) {
      std::cerr << "-- " << r.plan.requirement << " (" << r.result.rows.size() << " rows)\n" << r.query.sql << "\n";
    }
  }
  std::vector<std::string> statements, tables;
  for (const auto& r : results) {
    statements.push_back(r.statement.text);
    tables.push_back(r.table);
  }
  auto mode = o.mode == "tables" ? aag::FactMode::Tables : aag::FactMode::Statements;
  const auto& facts = mode == aag::FactMode::Tables ? tables : statements;

  if (o.mode == "statements" || o.mode == "tables") {
    emit(o, aag::facts_block(facts, mode));
    return kOk;
  }
  auto prompt = aag::build_prompt(bp, ring, req, facts, mode);
  timer.mark("prompt");
  if (o.mode == "prompt") {
    emit(o, prompt.text());
    return kOk;
  }
  auto config = aag::generation_profile(o.profile);
  if (const char* m = std::getenv("AAG_LLM_MODEL")) config.model = m;
  auto client = aag::make_llm_client(o.backend);
  auto report = client->generate({prompt.system, prompt.user}, config);
  timer.mark("generate");
  if (!report.empty() && report.back() != '\n') report += "\n";
  emit(o, report);
  // The facts the report was written from, for auditing.
  if (!o.out.empty()) aag::write_file_atomic(o.out + ".facts.txt", aag::facts_block(statements, aag::FactMode::Statements));
  return kOk;
}

void print_error(const aag::Error& e) {
  if (const auto* ve = dynamic_cast<const aag::ValidationError*>(&e)) {
    std::cerr << "error: ValidationError\n";
    for (const auto& v : ve->violations()) std::cerr << "  " << v.path << ": " << v.message << "\n";
    return;
  }
  std::cerr << "error: " << e.what() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fact-grounded report generation over relational data"};
  app.require_subcommand(1);
  Options o;

  auto* ring = app.add_subcommand("ring", "Ring schema commands")->require_subcommand(1);
  auto* validate = ring->add_subcommand("validate", "Validate a ring file");
  validate->add_option("ring", o.ring, "Ring JSON file")->required()->check(CLI::ExistingFile);

  auto* plan = app.add_subcommand("plan", "Plan commands")->require_subcommand(1);
  auto* run = plan->add_subcommand("run", "Compile and execute a plan");
  run->add_option("--ring", o.ring, "Ring JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--plan", o.plan, "Plan JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--db", o.db, "SQLite file (overrides the ring's db)");
  run->add_option("--out", o.out, "Write the result table here");
  run->add_flag("--sql", o.sql, "Print the generated SQL to stderr");

  auto* report = app.add_subcommand("report", "Report commands")->require_subcommand(1);
  auto* gen = report->add_subcommand("generate", "Generate report artifacts for a request");
  gen->add_option("--ring", o.ring, "Ring JSON file")->required()->check(CLI::ExistingFile);
  gen->add_option("--request", o.request, "Request JSON file")->required()->check(CLI::ExistingFile);
  gen->add_option("--mode", o.mode, "Output to produce")
      ->check(CLI::IsMember({"plans", "statements", "tables", "prompt", "report"}))
      ->capture_default_str();
  gen->add_option("--backend", o.backend, "LLM backend")->check(CLI::IsMember({"echo", "remote"}))->capture_default_str();
  gen->add_option("--profile", o.profile, "Generation profile")
      ->check(CLI::IsMember({"remote", "local"}))
      ->capture_default_str();
  gen->add_option("--out", o.out, "Output file (report mode also writes <out>.facts.txt)");
  gen->add_option("--db", o.db, "SQLite file (overrides the ring's db)");
  gen->add_option("--data-dir", o.data_dir, "Directory holding templates/ and blueprints/");
  gen->add_option("--workers", o.workers, "Parallel query workers")->check(CLI::Range(1u, 64u))->capture_default_str();
  gen->add_flag("--verbose", o.verbose, "Print stage timings and per-requirement SQL to stderr");

  auto* db = app.add_subcommand("db", "Database commands")->require_subcommand(1);
  auto* load = db->add_subcommand("load", "Build a SQLite file from CSV files named after ring tables");
  load->add_option("--ring", o.ring, "Ring JSON file")->required()->check(CLI::ExistingFile);
  load->add_option("--csv-dir", o.csv_dir, "Directory of <table>.csv")->required()->check(CLI::ExistingDirectory);
  load->add_option("--out", o.out, "Output file (defaults to the ring's db)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (validate->parsed()) return ring_validate(o);
    if (run->parsed()) return plan_run(o);
    if (gen->parsed()) return report_generate(o);
    if (load->parsed()) return db_load(o);
  } catch (const aag::Error& e) {
    print_error(e);
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kInvalid;
}
