#include <algorithm>

#include "aag/compiler.hpp"
#include "aag/error.hpp"

namespace aag {

namespace {

struct Builder {
  const Ring& ring;
  JoinResolution out;

  bool has_table(const std::string& t) const {
    return std::find(out.required_tables.begin(), out.required_tables.end(), t) != out.required_tables.end();
  }
  void add_table(const std::string& t) {
    if (!has_table(t)) out.required_tables.push_back(t);
  }
  void add_join(const JoinDef& j, const std::string& origin) {
    for (const auto& r : out.join_sequence) {
      if (r.join.name == j.name) return;
    }
    out.join_sequence.push_back({j, origin});
    add_table(j.left.table);
    add_table(j.right.table);
  }
};

}  // namespace

JoinResolution resolve_joins(const Ring& ring, const Subplan& subplan) {
  std::vector<std::string> ents = subplan.entities;
  std::sort(ents.begin(), ents.end(),
            [&](const auto& a, const auto& b) { return ring.entity_index(a) < ring.entity_index(b); });
  Builder b{ring, {}};
  if (ents.empty()) return b.out;

  std::vector<std::string> included;
  for (const auto& name : ents) {
    const auto& ent = ring.entity(name);
    if (included.empty()) {
      b.add_table(ent.primary_table);
    } else {
      const RelationshipDef* rel = nullptr;
      for (const auto& r : ring.relationships) {
        bool fwd = r.to_entity == name &&
                   std::find(included.begin(), included.end(), r.from_entity) != included.end();
        bool back = r.from_entity == name &&
                    std::find(included.begin(), included.end(), r.to_entity) != included.end();
        if (fwd || back) {
          rel = &r;
          break;
        }
      }
      if (!rel) {
        throw Error(ErrorCode::NoRelationship, "no relationship connects '" + name + "' to " + included.front(),
                    "subplan " + std::to_string(subplan.id));
      }
      std::vector<std::string> path = rel->join_path;
      // Walk from the side already in the query so every join adds a new table.
      if (rel->from_entity == name) std::reverse(path.begin(), path.end());
      for (const auto& j : path) b.add_join(*ring.find_join(j), rel->name);
    }
    included.push_back(name);
    for (const auto& [e, a] : subplan.attributes) {
      if (e != name) continue;
      const auto& attr = ring.attribute(e, a);
      if (attr.source.empty()) continue;
      auto path = shortest_join_path(ring, ent.primary_table, attr.source.front().table);
      if (!path) {
        throw Error(ErrorCode::NoRelationship, "table '" + attr.source.front().table + "' is unreachable",
                    e + "." + a);
      }
      for (const auto* j : *path) b.add_join(*j, "intra-entity");
    }
  }
  return b.out;
}

}  // namespace aag
