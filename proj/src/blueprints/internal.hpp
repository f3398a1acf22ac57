#pragma once

#include <string>
#include <vector>

#include "aag/blueprints.hpp"

namespace aag::detail {

// " (where year is 2020; from year 2010 to year 2020)", or "" when nothing applies.
// Literals that appear in the text are appended to `audit`.
std::string conditions_text(const Ring& ring, const ReportRequest& req, const std::vector<std::string>& filters,
                            std::vector<TypedValue>* audit);

// metric, target, entity, entity_plural; conditions is left to the caller.
StatementInputs base_inputs(const Ring& ring, const ReportRequest& req);

}  // namespace aag::detail
