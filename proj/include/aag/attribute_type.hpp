#pragma once

#include <bitset>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aag {

// The first six kinds may appear on ring attributes; the rest only on
// intermediate step outputs. Attribute is the registry wildcard.
enum class AttributeType : std::uint8_t {
  Arithmetic,
  Categorical,
  Datetime,
  Document,
  Identifier,
  Metric,
  Filter,
  Grouping,
  Sort,
  Limit,
  RowNum,
  AttributeCollection,
  Entity,
  String,
  Attribute,
};

inline constexpr std::size_t kAttributeTypeCount = 15;

std::string_view to_string(AttributeType t);
std::optional<AttributeType> parse_attribute_type(std::string_view s);
bool is_primary(AttributeType t);

class TypeSet {
 public:
  TypeSet() = default;
  TypeSet(std::initializer_list<AttributeType> types);

  void insert(AttributeType t) { bits_.set(static_cast<std::size_t>(t)); }
  bool contains(AttributeType t) const { return bits_.test(static_cast<std::size_t>(t)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }
  bool intersects(const TypeSet& o) const { return (bits_ & o.bits_).any(); }
  TypeSet operator&(const TypeSet& o) const;
  TypeSet operator|(const TypeSet& o) const;
  bool operator==(const TypeSet& o) const = default;

  std::vector<AttributeType> members() const;
  // "[Arithmetic, Metric]"
  std::string str() const;

 private:
  std::bitset<kAttributeTypeCount> bits_;
};

TypeSet primary_types();
// Everything a column can hold: primary kinds plus Filter and RowNum.
TypeSet attribute_like_types();
// Does a value of type `found` satisfy an input declared as `allowed`?
bool accepts(const TypeSet& allowed, const TypeSet& found);

}  // namespace aag
