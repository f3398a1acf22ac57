#include "aag/compose.hpp"

#include <cctype>

#include "aag/error.hpp"
#include "aag/typecheck.hpp"

namespace aag {

std::string prefixed_label(std::size_t prefix, const std::string& label) {
  std::string p = std::to_string(prefix);
  if (!label.empty() && std::isdigit(static_cast<unsigned char>(label.front()))) p += "_";
  return p + label;
}

namespace {

SqrStep rename_step(const SqrStep& s, std::size_t prefix) {
  SqrStep out{prefixed_label(prefix, s.label), s.op, {}};
  for (const auto& a : s.args) {
    if (auto* r = std::get_if<StepRef>(&a)) out.args.push_back(StepRef{prefixed_label(prefix, r->label)});
    else out.args.push_back(a);
  }
  return out;
}

}  // namespace

SqrPlan compose_plans(const SqrPlan& template_plan, const std::vector<SqrPlan>& parts,
                      const std::map<std::string, std::size_t>& wiring) {
  std::vector<bool> used(parts.size(), false);
  for (const auto& [slot, idx] : wiring) {
    if (idx >= parts.size()) {
      throw Error(ErrorCode::WiringError, "slot {" + slot + "} wired to missing part " + std::to_string(idx));
    }
    used[idx] = true;
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!used[i]) throw Error(ErrorCode::WiringError, "part " + std::to_string(i) + " is not wired to any slot");
  }

  SqrPlan out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (const auto& s : parts[i].steps()) out.add_step(rename_step(s, i + 1));
  }
  const std::size_t tp = parts.size() + 1;
  for (const auto& s : template_plan.steps()) {
    SqrStep r{prefixed_label(tp, s.label), s.op, {}};
    for (const auto& a : s.args) {
      if (auto* ref = std::get_if<StepRef>(&a)) {
        r.args.push_back(StepRef{prefixed_label(tp, ref->label)});
      } else if (auto* slot = std::get_if<Slot>(&a)) {
        if (!slot->reference) {
          throw Error(ErrorCode::WiringError, "literal slot {" + slot->name + "} was not substituted", s.label);
        }
        auto it = wiring.find(slot->name);
        if (it == wiring.end()) throw Error(ErrorCode::WiringError, "unmapped template input {" + slot->name + "}", s.label);
        r.args.push_back(StepRef{prefixed_label(it->second + 1, parts[it->second].result())});
      } else {
        r.args.push_back(a);
      }
    }
    out.add_step(std::move(r));
  }
  out.set_result(prefixed_label(tp, template_plan.result()));
  check_plan_structure(out, false, "composed");
  topological_order(out);
  return out;
}

}  // namespace aag
