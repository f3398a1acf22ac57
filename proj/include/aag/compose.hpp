#pragma once

#include <map>
#include <string>
#include <vector>

#include "aag/plan.hpp"

namespace aag {

// Appends each part under a fresh numeric label prefix (part i gets i + 1,
// the template gets parts.size() + 1) and rewires the template's reference
// slots to the renamed part terminals. Part steps come first.
SqrPlan compose_plans(const SqrPlan& template_plan, const std::vector<SqrPlan>& parts,
                      const std::map<std::string, std::size_t>& wiring);

// "8" + "A" -> "8A"; labels that already start with a digit get a "_"
// separator so prefixes of different lengths never collide.
std::string prefixed_label(std::size_t prefix, const std::string& label);

}  // namespace aag
