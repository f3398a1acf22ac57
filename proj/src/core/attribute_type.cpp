#include "aag/attribute_type.hpp"

#include <array>

namespace aag {

namespace {

constexpr std::array<std::string_view, kAttributeTypeCount> kNames = {
    "Arithmetic", "Categorical", "Datetime", "Document", "Identifier",
    "Metric", "Filter", "Grouping", "Sort", "Limit",
    "RowNum", "AttributeCollection", "Entity", "String", "Attribute",
};

}  // namespace

std::string_view to_string(AttributeType t) { return kNames[static_cast<std::size_t>(t)]; }

std::optional<AttributeType> parse_attribute_type(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<AttributeType>(i);
  }
  return std::nullopt;
}

bool is_primary(AttributeType t) { return static_cast<std::size_t>(t) <= static_cast<std::size_t>(AttributeType::Metric); }

TypeSet::TypeSet(std::initializer_list<AttributeType> types) {
  for (auto t : types) insert(t);
}

TypeSet TypeSet::operator&(const TypeSet& o) const {
  TypeSet r;
  r.bits_ = bits_ & o.bits_;
  return r;
}

TypeSet TypeSet::operator|(const TypeSet& o) const {
  TypeSet r;
  r.bits_ = bits_ | o.bits_;
  return r;
}

std::vector<AttributeType> TypeSet::members() const {
  std::vector<AttributeType> out;
  for (std::size_t i = 0; i < kAttributeTypeCount; ++i) {
    if (bits_.test(i)) out.push_back(static_cast<AttributeType>(i));
  }
  return out;
}

std::string TypeSet::str() const {
  std::string s = "[";
  bool first = true;
  for (auto t : members()) {
    if (!first) s += ", ";
    s += to_string(t);
    first = false;
  }
  return s + "]";
}

TypeSet primary_types() {
  return {AttributeType::Arithmetic, AttributeType::Categorical, AttributeType::Datetime,
          AttributeType::Document, AttributeType::Identifier, AttributeType::Metric};
}

TypeSet attribute_like_types() {
  TypeSet t = primary_types();
  t.insert(AttributeType::Filter);
  t.insert(AttributeType::RowNum);
  return t;
}

bool accepts(const TypeSet& allowed, const TypeSet& found) {
  if (allowed.intersects(found)) return true;
  return allowed.contains(AttributeType::Attribute) && found.intersects(attribute_like_types());
}

}  // namespace aag
