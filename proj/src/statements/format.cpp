#include <cctype>
#include <cmath>
#include <cstdio>

#include "aag/statements.hpp"

namespace aag {

namespace {

std::string group_thousands(const std::string& digits) {
  std::string out;
  int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

// Inserts separators into the integer part of a plain decimal string.
std::string with_separators(const std::string& s) {
  std::size_t start = s[0] == '-' ? 1 : 0;
  std::size_t dot = s.find('.');
  if (dot == std::string::npos) dot = s.size();
  return s.substr(0, start) + group_thousands(s.substr(start, dot - start)) + s.substr(dot);
}

bool plain_number(const TypedValue& v) {
  // Years and identifiers read wrong with separators.
  return !v.kind.contains(AttributeType::Datetime) && !v.kind.contains(AttributeType::Identifier);
}

}  // namespace

std::string format_value(const TypedValue& v) {
  std::string out;
  if (is_null(v.value)) return "unknown";
  if (auto* b = std::get_if<bool>(&v.value)) return *b ? "yes" : "no";
  if (auto* i = std::get_if<std::int64_t>(&v.value)) {
    out = std::to_string(*i);
    if (std::llabs(*i) >= 10000 && plain_number(v)) out = with_separators(out);
  } else if (auto* d = std::get_if<double>(&v.value)) {
    char buf[64];
    // glibc rounds the exact binary value with ties to even.
    std::snprintf(buf, sizeof buf, "%.2f", *d);
    out = buf;
    if (out == "-0.00") out = "0.00";
    if (std::fabs(*d) >= 10000 && plain_number(v)) out = with_separators(out);
  } else {
    out = std::get<std::string>(v.value);
    if (v.kind.contains(AttributeType::Datetime) && out.size() > 10 &&
        (out.compare(10, std::string::npos, " 00:00:00") == 0 || out.compare(10, std::string::npos, "T00:00:00") == 0)) {
      out = out.substr(0, 10);
    }
    return out;
  }
  if (is_percent(v.units)) out += "%";
  return out;
}

std::string format_with_units(const TypedValue& v) {
  auto s = format_value(v);
  if (!v.units || is_percent(v.units) || is_null(v.value) || std::holds_alternative<bool>(v.value)) return s;
  auto d = as_double(v.value);
  bool one = d && *d == 1.0 && std::holds_alternative<std::int64_t>(v.value);
  return s + " " + (one ? v.units->singular : v.units->plural);
}

std::string join_list(const std::vector<std::string>& items) {
  if (items.empty()) return "";
  if (items.size() == 1) return items[0];
  if (items.size() == 2) return items[0] + " and " + items[1];
  std::string out;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) out += items[i] + ", ";
  return out + "and " + items.back();
}

std::string title_case(const std::string& s) {
  std::string out = s;
  bool start = true;
  for (auto& c : out) {
    if (start && std::isalpha(static_cast<unsigned char>(c))) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    start = c == ' ';
  }
  return out;
}

}  // namespace aag
