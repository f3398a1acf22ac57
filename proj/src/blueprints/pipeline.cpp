#include <atomic>
#include <exception>
#include <thread>

#include "aag/blueprints.hpp"
#include "aag/sqlite_db.hpp"

namespace aag {

std::vector<RequirementResult> run_report(const Ring& ring, const Library& lib, const ReportRequest& req,
                                          unsigned workers) {
  const auto& bp = lib.blueprint(req.report_type);
  auto plans = instantiate(bp, ring, lib, req);

  std::vector<RequirementResult> out(plans.size());
  for (std::size_t i = 0; i < plans.size(); ++i) {
    out[i].plan = std::move(plans[i]);
    try {
      out[i].query = compile(ring, out[i].plan.plan);
    } catch (const Error& e) {
      rethrow_with_context(e, out[i].plan.requirement);
    }
  }

  // Requirements are independent; results land in their own slot so order is kept.
  auto db_path = sqlite_path(ring);
  std::vector<std::exception_ptr> errors(out.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    std::optional<Database> db;
    for (std::size_t i = next++; i < out.size(); i = next++) {
      try {
        if (!db) db = Database::open(db_path);
        out[i].result = run_query(*db, out[i].query);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(out.size())));
  for (unsigned w = 0; w < n; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& r = out[i];
    try {
      if (errors[i]) std::rethrow_exception(errors[i]);
      r.statement = render_statement(lib.statements.at(r.plan.statement), r.result, r.plan.inputs);
      r.statement.source_plan = r.plan.requirement;
      r.table = render_table(r.result);
    } catch (const Error& e) {
      rethrow_with_context(e, r.plan.requirement);
    }
  }
  return out;
}

}  // namespace aag
