#include "aag/ring.hpp"

#include <deque>
#include <set>

#include "aag/registry.hpp"

namespace aag {

const ColumnDef* TableDef::find_column(const std::string& column) const {
  for (const auto& c : columns) {
    if (c.name == column) return &c;
  }
  return nullptr;
}

const AttributeDef* EntityDef::find_attribute(const std::string& attribute) const {
  for (const auto& a : attributes) {
    if (a.name == attribute) return &a;
  }
  return nullptr;
}

const AttributeDef* EntityDef::identifier() const {
  for (const auto& a : attributes) {
    if (!a.derived && a.types.contains(AttributeType::Identifier)) return &a;
  }
  return nullptr;
}

const TableDef* Ring::find_table(const std::string& table) const {
  for (const auto& t : tables) {
    if (t.name == table) return &t;
  }
  return nullptr;
}

const JoinDef* Ring::find_join(const std::string& join) const {
  for (const auto& j : joins) {
    if (j.name == join) return &j;
  }
  return nullptr;
}

const EntityDef* Ring::find_entity(const std::string& entity) const {
  for (const auto& e : entities) {
    if (e.name == entity) return &e;
  }
  return nullptr;
}

const EntityDef& Ring::entity(const std::string& entity) const {
  const auto* e = find_entity(entity);
  if (!e) throw Error(ErrorCode::UnknownEntity, "no entity '" + entity + "' in ring " + name);
  return *e;
}

const AttributeDef& Ring::attribute(const std::string& entity_name, const std::string& attribute) const {
  const auto* a = entity(entity_name).find_attribute(attribute);
  if (!a) throw Error(ErrorCode::UnknownAttribute, "entity " + entity_name + " has no attribute '" + attribute + "'");
  return *a;
}

std::size_t Ring::entity_index(const std::string& entity) const {
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (entities[i].name == entity) return i;
  }
  return entities.size();
}

std::string Ring::storage_type(const ColumnRef& ref) const {
  const auto* t = find_table(ref.table);
  if (!t) return {};
  const auto* c = t->find_column(ref.column);
  return c ? c->type : std::string{};
}

std::string pluralize(const std::string& singular, const std::map<std::string, std::string>& overrides) {
  if (auto it = overrides.find(singular); it != overrides.end()) return it->second;
  auto sp = singular.rfind(' ');
  std::string head = sp == std::string::npos ? "" : singular.substr(0, sp + 1);
  std::string last = sp == std::string::npos ? singular : singular.substr(sp + 1);
  if (auto it = overrides.find(last); it != overrides.end()) return head + it->second;
  return singular + "s";
}

namespace {

ColumnRef parse_column_ref(const Json& j, const std::string& path) {
  if (!j.is_string()) throw Error(ErrorCode::ParseError, "column reference must be \"table.column\"", path);
  auto s = j.get<std::string>();
  auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) {
    throw Error(ErrorCode::ParseError, "column reference must be \"table.column\"", path);
  }
  return {s.substr(0, dot), s.substr(dot + 1)};
}

std::optional<Units> parse_units(const Json& j, const std::map<std::string, std::string>& plurals,
                                 const std::string& path) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) {
    auto s = j.get<std::string>();
    return Units{s, s == "%" ? s : pluralize(s, plurals)};
  }
  if (j.is_object()) {
    auto s = require_string(j, "singular", path);
    std::string p = j.contains("plural") ? require_string(j, "plural", path) : pluralize(s, plurals);
    return Units{s, p};
  }
  throw Error(ErrorCode::ParseError, "units must be a string or {singular, plural}", path);
}

Nicename parse_nicename(const Json& j, const std::map<std::string, std::string>& plurals, const std::string& path) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    return {s, pluralize(s, plurals)};
  }
  if (j.is_object()) {
    auto s = require_string(j, "singular", path);
    return {s, j.contains("plural") ? require_string(j, "plural", path) : pluralize(s, plurals)};
  }
  throw Error(ErrorCode::ParseError, "nicename must be a string or {singular, plural}", path);
}

TypeSet parse_types(const Json& j, const std::string& path) {
  require_array(j, path);
  TypeSet t;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(ErrorCode::ParseError, "type names must be strings", path);
    auto parsed = parse_attribute_type(e.get<std::string>());
    if (!parsed) throw Error(ErrorCode::ParseError, "unknown attribute type '" + e.get<std::string>() + "'", path);
    t.insert(*parsed);
  }
  return t;
}

Json types_to_json(const TypeSet& t) {
  Json a = Json::array();
  for (auto m : t.members()) a.push_back(std::string(to_string(m)));
  return a;
}

Json units_to_json(const Units& u) { return Json{{"singular", u.singular}, {"plural", u.plural}}; }

}  // namespace

Ring parse_ring(const Json& doc, const std::filesystem::path& base_dir, const std::string& origin) {
  check_format(doc, "ring_schema_v1", origin);
  Ring ring;
  ring.base_dir = base_dir;
  ring.name = require_string(doc, "name", origin);
  ring.db = require_string(doc, "db", origin);
  if (doc.contains("plurals")) {
    require_object(doc["plurals"], "plurals");
    for (auto it = doc["plurals"].begin(); it != doc["plurals"].end(); ++it) {
      if (!it.value().is_string()) throw Error(ErrorCode::ParseError, "plural overrides must be strings", "plurals");
      ring.plurals[it.key()] = it.value().get<std::string>();
    }
  }

  const auto& tables = require_field(doc, "tables", origin);
  require_array(tables, "tables");
  for (const auto& t : tables) {
    TableDef td{require_string(t, "name", "tables"), {}};
    const std::string tp = "tables." + td.name;
    const auto& cols = require_field(t, "columns", tp);
    require_array(cols, tp + ".columns");
    for (const auto& c : cols) {
      td.columns.push_back({require_string(c, "name", tp + ".columns"), require_string(c, "type", tp + ".columns")});
    }
    ring.tables.push_back(std::move(td));
  }

  if (doc.contains("joins")) {
    require_array(doc["joins"], "joins");
    for (const auto& j : doc["joins"]) {
      auto name = require_string(j, "name", "joins");
      const std::string jp = "joins." + name;
      ring.joins.push_back({name, parse_column_ref(require_field(j, "left", jp), jp + ".left"),
                            parse_column_ref(require_field(j, "right", jp), jp + ".right")});
    }
  }

  const auto& entities = require_field(doc, "entities", origin);
  require_array(entities, "entities");
  for (const auto& e : entities) {
    EntityDef ed;
    ed.name = require_string(e, "name", "entities");
    const std::string ep = "entities." + ed.name;
    ed.nicename = e.contains("nicename") ? parse_nicename(e["nicename"], ring.plurals, ep + ".nicename")
                                         : Nicename{ed.name, pluralize(ed.name, ring.plurals)};
    ed.primary_table = require_string(e, "primary_table", ep);
    const auto& attrs = require_field(e, "attributes", ep);
    require_array(attrs, ep + ".attributes");
    for (const auto& a : attrs) {
      AttributeDef ad;
      ad.name = require_string(a, "name", ep + ".attributes");
      const std::string ap = ep + ".attributes." + ad.name;
      ad.nicename = a.contains("nicename") ? require_string(a, "nicename", ap) : ad.name;
      if (a.contains("units")) ad.units = parse_units(a["units"], ring.plurals, ap + ".units");
      ad.types = parse_types(require_field(a, "types", ap), ap + ".types");
      const auto& src = require_field(a, "source", ap);
      if (src.is_array()) {
        for (const auto& s : src) ad.source.push_back(parse_column_ref(s, ap + ".source"));
      } else {
        ad.source.push_back(parse_column_ref(src, ap + ".source"));
      }
      if (a.contains("derived")) {
        const auto& d = a["derived"];
        ad.derived = true;
        ad.derived_op = require_string(d, "operation", ap + ".derived");
        ad.derived_base = require_string(d, "base", ap + ".derived");
      }
      ed.attributes.push_back(std::move(ad));
    }
    ring.entities.push_back(std::move(ed));
  }

  if (doc.contains("relationships")) {
    require_array(doc["relationships"], "relationships");
    for (const auto& r : doc["relationships"]) {
      RelationshipDef rd;
      rd.name = require_string(r, "name", "relationships");
      const std::string rp = "relationships." + rd.name;
      rd.from_entity = require_string(r, "from_entity", rp);
      rd.to_entity = require_string(r, "to_entity", rp);
      if (r.contains("join_path")) {
        require_array(r["join_path"], rp + ".join_path");
        for (const auto& j : r["join_path"]) {
          if (!j.is_string()) throw Error(ErrorCode::ParseError, "join names must be strings", rp + ".join_path");
          rd.join_path.push_back(j.get<std::string>());
        }
      } else {
        // Omitted paths default to the shortest path between primary tables.
        const auto* from = ring.find_entity(rd.from_entity);
        const auto* to = ring.find_entity(rd.to_entity);
        if (from && to) {
          if (auto p = shortest_join_path(ring, from->primary_table, to->primary_table)) {
            for (const auto* j : *p) rd.join_path.push_back(j->name);
          }
        }
      }
      ring.relationships.push_back(std::move(rd));
    }
  }
  return ring;
}

Ring load_ring(const std::filesystem::path& path) {
  auto doc = load_json(path);
  Ring ring = parse_ring(doc, path.parent_path(), path.filename().string());
  auto violations = validate_ring(ring);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return ring;
}

Json ring_to_json(const Ring& ring) {
  Json doc{{"format", "ring_schema_v1"}, {"name", ring.name}, {"db", ring.db}};
  if (!ring.plurals.empty()) {
    Json p = Json::object();
    for (const auto& [k, v] : ring.plurals) p[k] = v;
    doc["plurals"] = p;
  }
  Json tables = Json::array();
  for (const auto& t : ring.tables) {
    Json cols = Json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"type", c.type}});
    tables.push_back({{"name", t.name}, {"columns", cols}});
  }
  doc["tables"] = tables;
  Json joins = Json::array();
  for (const auto& j : ring.joins) joins.push_back({{"name", j.name}, {"left", j.left.str()}, {"right", j.right.str()}});
  doc["joins"] = joins;
  Json entities = Json::array();
  for (const auto& e : ring.entities) {
    Json attrs = Json::array();
    for (const auto& a : e.attributes) {
      Json aj{{"name", a.name}, {"nicename", a.nicename}};
      if (a.units) aj["units"] = units_to_json(*a.units);
      aj["types"] = types_to_json(a.types);
      Json src = Json::array();
      for (const auto& s : a.source) src.push_back(s.str());
      aj["source"] = src;
      if (a.derived) aj["derived"] = {{"operation", a.derived_op}, {"base", a.derived_base}};
      attrs.push_back(aj);
    }
    entities.push_back({{"name", e.name},
                        {"nicename", {{"singular", e.nicename.singular}, {"plural", e.nicename.plural}}},
                        {"primary_table", e.primary_table},
                        {"attributes", attrs}});
  }
  doc["entities"] = entities;
  Json rels = Json::array();
  for (const auto& r : ring.relationships) {
    rels.push_back({{"name", r.name}, {"from_entity", r.from_entity}, {"to_entity", r.to_entity},
                    {"join_path", r.join_path}});
  }
  doc["relationships"] = rels;
  return doc;
}

std::optional<std::vector<const JoinDef*>> shortest_join_path(const Ring& ring, const std::string& from,
                                                              const std::string& to) {
  if (from == to) return std::vector<const JoinDef*>{};
  std::map<std::string, std::pair<std::string, const JoinDef*>> parent;
  std::deque<std::string> queue{from};
  parent[from] = {"", nullptr};
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (const auto& j : ring.joins) {
      std::string next;
      if (j.left.table == cur) next = j.right.table;
      else if (j.right.table == cur) next = j.left.table;
      else continue;
      if (parent.count(next)) continue;
      parent[next] = {cur, &j};
      if (next == to) {
        std::vector<const JoinDef*> path;
        for (std::string t = to; t != from; t = parent[t].first) path.insert(path.begin(), parent[t].second);
        return path;
      }
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

std::vector<Violation> validate_ring(const Ring& ring) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string path, std::string msg) {
    out.push_back({std::move(code), std::move(path), std::move(msg)});
  };
  auto check_ref = [&](const ColumnRef& ref, const std::string& path) {
    const auto* t = ring.find_table(ref.table);
    if (!t) {
      add("UnknownTable", path, "table '" + ref.table + "' does not exist");
    } else if (!t->find_column(ref.column)) {
      add("UnknownColumn", path, "column '" + ref.str() + "' does not exist");
    }
  };

  if (ring.db.rfind("sqlite://", 0) != 0 || ring.db.size() <= 9) {
    add("InvalidDb", "db", "connection string must be sqlite://<path>");
  }

  std::set<std::string> names;
  for (const auto& t : ring.tables) {
    const std::string tp = "tables." + t.name;
    if (!names.insert(t.name).second) add("DuplicateTable", tp, "duplicate table '" + t.name + "'");
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (!cols.insert(c.name).second) add("DuplicateColumn", tp + ".columns." + c.name, "duplicate column");
      if (c.type != "integer" && c.type != "real" && c.type != "text") {
        add("BadColumnType", tp + ".columns." + c.name, "storage type must be integer, real or text");
      }
    }
  }

  names.clear();
  for (const auto& j : ring.joins) {
    const std::string jp = "joins." + j.name;
    if (!names.insert(j.name).second) add("DuplicateJoin", jp, "duplicate join '" + j.name + "'");
    check_ref(j.left, jp + ".left");
    check_ref(j.right, jp + ".right");
  }

  if (ring.entities.empty()) add("EmptyEntities", "entities", "entities must be non-empty");
  names.clear();
  for (const auto& e : ring.entities) {
    const std::string ep = "entities." + e.name;
    if (!names.insert(e.name).second) add("DuplicateEntity", ep, "duplicate entity '" + e.name + "'");
    if (!ring.find_table(e.primary_table)) {
      add("UnknownTable", ep + ".primary_table", "table '" + e.primary_table + "' does not exist");
    }
    std::set<std::string> attrs;
    int identifiers = 0;
    for (const auto& a : e.attributes) {
      const std::string ap = ep + ".attributes." + a.name;
      if (!attrs.insert(a.name).second) add("DuplicateAttribute", ap, "duplicate attribute '" + a.name + "'");
      if (a.types.empty()) add("EmptyTypes", ap + ".types", "types must be non-empty");
      for (auto t : a.types.members()) {
        if (!is_primary(t)) add("NonPrimaryType", ap + ".types", std::string(to_string(t)) + " is internal-only");
      }
      if (a.types.contains(AttributeType::Metric) && !a.types.contains(AttributeType::Arithmetic) &&
          !a.types.contains(AttributeType::Datetime)) {
        add("MetricWithoutOrder", ap + ".types", "Metric attributes need Arithmetic or Datetime");
      }
      if (a.source.empty()) add("EmptySource", ap + ".source", "source must name at least one column");
      for (const auto& s : a.source) check_ref(s, ap + ".source");
      if (a.derived) continue;
      if (a.types.contains(AttributeType::Identifier)) {
        ++identifiers;
        if (!a.source.empty() && a.source.front().table != e.primary_table) {
          add("IdentifierNotInPrimaryTable", ap + ".source", "identifier must live in the primary table");
        }
      }
      if (!a.source.empty() && ring.find_table(a.source.front().table) && ring.find_table(e.primary_table) &&
          !shortest_join_path(ring, e.primary_table, a.source.front().table)) {
        add("DisconnectedAttributeTable", ap + ".source", "no join path from " + e.primary_table);
      }
    }
    if (identifiers == 0) add("MissingIdentifier", ep + ".attributes", "exactly one attribute must be Identifier");
    if (identifiers > 1) add("DuplicateIdentifier", ep + ".attributes", "exactly one attribute must be Identifier");
  }

  names.clear();
  for (const auto& r : ring.relationships) {
    const std::string rp = "relationships." + r.name;
    if (!names.insert(r.name).second) add("DuplicateRelationship", rp, "duplicate relationship '" + r.name + "'");
    const auto* from = ring.find_entity(r.from_entity);
    const auto* to = ring.find_entity(r.to_entity);
    if (!from) add("UnknownEntity", rp + ".from_entity", "entity '" + r.from_entity + "' does not exist");
    if (!to) add("UnknownEntity", rp + ".to_entity", "entity '" + r.to_entity + "' does not exist");
    bool joins_ok = true;
    for (const auto& jn : r.join_path) {
      if (!ring.find_join(jn)) {
        add("UnknownJoin", rp + ".join_path", "join '" + jn + "' does not exist");
        joins_ok = false;
      }
    }
    if (!from || !to || !joins_ok) continue;
    // Replay the chain from the source table.
    std::string cur = from->primary_table;
    bool broken = false;
    for (const auto& jn : r.join_path) {
      const auto* j = ring.find_join(jn);
      if (j->left.table == cur) cur = j->right.table;
      else if (j->right.table == cur) cur = j->left.table;
      else {
        broken = true;
        break;
      }
    }
    if (broken || cur != to->primary_table) {
      add("BrokenJoinPath", rp + ".join_path",
          "path does not connect " + from->primary_table + " to " + to->primary_table);
      continue;
    }
    auto shortest = shortest_join_path(ring, from->primary_table, to->primary_table);
    if (shortest && shortest->size() < r.join_path.size()) {
      add("NonMinimalJoinPath", rp + ".join_path", "a shorter join path exists");
    }
  }
  return out;
}

Ring derive_attributes(const Ring& ring) {
  Ring out = ring;
  std::vector<Violation> collisions;
  for (auto& e : out.entities) {
    std::vector<AttributeDef> added;
    for (const auto& a : e.attributes) {
      if (a.derived) continue;
      for (const auto& op : Registry::builtin().operations()) {
        if (!derives_attributes(op) || !accepts(op.inputs.front().allowed, a.types)) continue;
        AttributeDef d;
        d.name = op.nicename + " " + a.name;
        d.nicename = op.nicename + " " + a.nicename;
        d.units = units_after(op.name, a.units);
        d.types = op.output;
        d.source = a.source;
        d.derived = true;
        d.derived_op = op.name;
        d.derived_base = a.name;
        if (const auto* existing = e.find_attribute(d.name)) {
          if (!existing->derived) {
            collisions.push_back({"DerivedNameCollision", "entities." + e.name + ".attributes." + d.name,
                                  "derived attribute name collides with a declared attribute"});
          }
          continue;
        }
        added.push_back(std::move(d));
      }
    }
    for (auto& d : added) e.attributes.push_back(std::move(d));
  }
  if (!collisions.empty()) throw ValidationError(std::move(collisions));
  return out;
}

AccessPlan build_access_plan(const Ring& ring, const std::string& entity, const std::string& attribute) {
  const auto& e = ring.entity(entity);
  const auto* a = e.find_attribute(attribute);
  if (!a) throw Error(ErrorCode::UnknownAttribute, "entity " + entity + " has no attribute '" + attribute + "'");
  AccessPlan ap{entity, attribute, {}, a->types};
  ap.plan.add_step({"A", "retrieve_entity", {make_literal(entity)}});
  ap.plan.add_step({"B", "retrieve_attribute", {StepRef{"A"}, make_literal(a->derived ? a->derived_base : a->name)}});
  if (a->derived) {
    ap.plan.add_step({"C", a->derived_op, {StepRef{"B"}}});
    ap.plan.set_result("C");
  } else {
    ap.plan.set_result("B");
  }
  return ap;
}

std::filesystem::path sqlite_path(const Ring& ring) {
  std::filesystem::path p = ring.db.substr(std::string("sqlite://").size());
  if (p.is_relative()) p = ring.base_dir / p;
  return p;
}

const AttributeDef* resolve_attribute(const EntityDef& entity, const std::string& text) {
  if (const auto* a = entity.find_attribute(text)) return a;
  for (const auto& a : entity.attributes) {
    if (a.nicename == text) return &a;
  }
  return nullptr;
}

}  // namespace aag
