#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aag/error.hpp"
#include "aag/io.hpp"
#include "aag/plan.hpp"
#include "aag/value.hpp"

namespace aag {

struct ColumnDef {
  std::string name;
  std::string type;  // integer | real | text
  bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  const ColumnDef* find_column(const std::string& column) const;
  bool operator==(const TableDef&) const = default;
};

struct ColumnRef {
  std::string table;
  std::string column;
  std::string str() const { return table + "." + column; }
  bool operator==(const ColumnRef&) const = default;
};

struct JoinDef {
  std::string name;
  ColumnRef left;
  ColumnRef right;
  bool operator==(const JoinDef&) const = default;
};

struct Nicename {
  std::string singular;
  std::string plural;
  bool operator==(const Nicename&) const = default;
};

struct AttributeDef {
  std::string name;
  std::string nicename;
  std::optional<Units> units;
  TypeSet types;
  std::vector<ColumnRef> source;  // first entry is authoritative
  bool derived = false;
  std::string derived_op;    // registry op name, derived attributes only
  std::string derived_base;  // base attribute name, derived attributes only
  bool operator==(const AttributeDef&) const = default;
};

struct EntityDef {
  std::string name;
  Nicename nicename;
  std::string primary_table;
  std::vector<AttributeDef> attributes;

  const AttributeDef* find_attribute(const std::string& attribute) const;
  const AttributeDef* identifier() const;
  bool operator==(const EntityDef&) const = default;
};

struct RelationshipDef {
  std::string name;
  std::string from_entity;
  std::string to_entity;
  std::vector<std::string> join_path;
  bool operator==(const RelationshipDef&) const = default;
};

struct Ring {
  std::string name;
  std::string db;
  std::map<std::string, std::string> plurals;
  std::vector<TableDef> tables;
  std::vector<JoinDef> joins;
  std::vector<EntityDef> entities;
  std::vector<RelationshipDef> relationships;
  std::filesystem::path base_dir;  // resolves relative db paths; not part of equality

  const TableDef* find_table(const std::string& table) const;
  const JoinDef* find_join(const std::string& join) const;
  const EntityDef* find_entity(const std::string& entity) const;
  const EntityDef& entity(const std::string& entity) const;  // throws UnknownEntity
  const AttributeDef& attribute(const std::string& entity, const std::string& attribute) const;
  std::size_t entity_index(const std::string& entity) const;
  // Column storage type of table.column; empty when unknown.
  std::string storage_type(const ColumnRef& ref) const;

  bool operator==(const Ring& o) const {
    return name == o.name && db == o.db && plurals == o.plurals && tables == o.tables && joins == o.joins &&
           entities == o.entities && relationships == o.relationships;
  }
};

struct AccessPlan {
  std::string entity;
  std::string attribute;
  SqrPlan plan;
  TypeSet output_types;
};

std::string pluralize(const std::string& singular, const std::map<std::string, std::string>& overrides);

Ring parse_ring(const Json& doc, const std::filesystem::path& base_dir, const std::string& origin = "ring");
Ring load_ring(const std::filesystem::path& path);
Json ring_to_json(const Ring& ring);

std::vector<Violation> validate_ring(const Ring& ring);
Ring derive_attributes(const Ring& ring);

AccessPlan build_access_plan(const Ring& ring, const std::string& entity, const std::string& attribute);

// Shortest join path between two tables (BFS over declared joins, declaration
// order breaks ties). nullopt when unreachable; empty when from == to.
std::optional<std::vector<const JoinDef*>> shortest_join_path(const Ring& ring, const std::string& from,
                                                              const std::string& to);

std::filesystem::path sqlite_path(const Ring& ring);

// Resolves a (possibly derived) attribute by name, then by nicename.
const AttributeDef* resolve_attribute(const EntityDef& entity, const std::string& text);

}  // namespace aag
