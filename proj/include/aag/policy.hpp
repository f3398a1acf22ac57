#pragma once

// Semantic constants shared by the SQL compiler and the reference evaluator.
// The two share these values and nothing else.

#include <string_view>

namespace aag::policy {

enum class StddevMode { Population, Sample };
inline constexpr StddevMode kStddevMode = StddevMode::Population;

// NULL sorts below every value (ascending first, descending last).
inline constexpr bool kNullsSortFirst = true;

// Tie-break keys are always appended in ascending order.
inline constexpr bool kTieBreakAscending = true;

inline constexpr double kPercentScale = 100.0;
inline constexpr std::string_view kStringAggSeparator = ", ";

// Integer years in Duration are read as January 1st, 00:00:00 UTC.
inline constexpr int kYearMonth = 1;
inline constexpr int kYearDay = 1;

}  // namespace aag::policy
