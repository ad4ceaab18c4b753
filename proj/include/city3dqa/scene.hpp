#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "city3dqa/errors.hpp"
#include "city3dqa/geometry.hpp"

namespace city3dqa {

// The eight directional relations, listed counterclockwise starting at the
// +x axis. The order matters: binning, opposites and 45-degree rotations are
// all index arithmetic mod 8.
enum class DirectionRelation : std::uint8_t {
  right = 0,
  front_right = 1,
  front = 2,
  front_left = 3,
  left = 4,
  back_left = 5,
  back = 6,
  back_right = 7,
};

inline constexpr std::array<DirectionRelation, 8> all_direction_relations = {
    DirectionRelation::right,     DirectionRelation::front_right,
    DirectionRelation::front,     DirectionRelation::front_left,
    DirectionRelation::left,      DirectionRelation::back_left,
    DirectionRelation::back,      DirectionRelation::back_right,
};

inline std::string_view to_string(DirectionRelation r) {
  switch (r) {
    case DirectionRelation::right: return "right";
    case DirectionRelation::front_right: return "front-right";
    case DirectionRelation::front: return "front";
    case DirectionRelation::front_left: return "front-left";
    case DirectionRelation::left: return "left";
    case DirectionRelation::back_left: return "back-left";
    case DirectionRelation::back: return "back";
    case DirectionRelation::back_right: return "back-right";
  }
  return "?";
}

inline std::optional<DirectionRelation> direction_from_string(
    std::string_view s) {
  for (DirectionRelation r : all_direction_relations) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

// 180-degree sector shift; an involution by construction.
inline DirectionRelation opposite(DirectionRelation r) {
  return static_cast<DirectionRelation>((static_cast<int>(r) + 4) % 8);
}

// Counterclockwise neighbor, one 45-degree sector over.
inline DirectionRelation rotate_ccw(DirectionRelation r, int sectors = 1) {
  return static_cast<DirectionRelation>(
      (static_cast<int>(r) + (sectors % 8 + 8)) % 8);
}

enum class SemanticAttribute : std::uint8_t {
  instance_label = 0,
  building_category_label = 1,
  synonym_label = 2,
  location = 3,
  usage_label = 4,
};

inline constexpr std::array<SemanticAttribute, 5> all_semantic_attributes = {
    SemanticAttribute::instance_label,
    SemanticAttribute::building_category_label,
    SemanticAttribute::synonym_label,
    SemanticAttribute::location,
    SemanticAttribute::usage_label,
};

inline std::string_view to_string(SemanticAttribute a) {
  switch (a) {
    case SemanticAttribute::instance_label: return "instance_label";
    case SemanticAttribute::building_category_label:
      return "building_category_label";
    case SemanticAttribute::synonym_label: return "synonym_label";
    case SemanticAttribute::location: return "location";
    case SemanticAttribute::usage_label: return "usage_label";
  }
  return "?";
}

inline std::optional<SemanticAttribute> attribute_from_string(
    std::string_view s) {
  for (SemanticAttribute a : all_semantic_attributes) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

// One segmented city object. Only aggregates are kept; per-point data stays
// in the source cloud.
struct Instance {
  std::uint32_t id = 0;
  std::string class_label;     // coarse: "building", "vehicle", "boat", ...
  std::string category_label;  // fine: "residential building", ...
  Vec3 centroid;
  Aabb aabb;
  std::uint64_t point_count = 0;
};

// (head, relation, tail): from head's position, tail lies toward `relation`.
struct SpatialEdge {
  std::uint32_t head = 0;
  DirectionRelation relation = DirectionRelation::front;
  std::uint32_t tail = 0;

  friend bool operator==(const SpatialEdge&, const SpatialEdge&) = default;
};

struct SemanticTriple {
  std::uint32_t subject = 0;
  SemanticAttribute attribute = SemanticAttribute::instance_label;
  std::string value;

  friend bool operator==(const SemanticTriple&, const SemanticTriple&) =
      default;
};

struct SceneGraph {
  std::string city;
  std::string scene_id;
  std::vector<Instance> instances;
  std::vector<SpatialEdge> spatial_edges;
  std::vector<SemanticTriple> semantic_triples;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string code;     // stable identifier, e.g. "unknown_instance_id"
  std::string message;  // human-readable, names the offending id
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every type invariant; violations are data, not exceptions.
inline ValidationReport validate_scene_graph(const SceneGraph& g) {
  ValidationReport rep;
  auto fail = [&](std::string code, std::string msg) {
    rep.violations.push_back({std::move(code), std::move(msg)});
  };

  std::set<std::uint32_t> ids;
  for (const Instance& inst : g.instances) {
    const std::string where = "instance " + std::to_string(inst.id);
    if (!ids.insert(inst.id).second) {
      fail("duplicate_instance_id", where + ": id not unique within scene");
    }
    if (!inst.centroid.is_finite()) {
      fail("non_finite_centroid", where + ": centroid has non-finite component");
    }
    if (!inst.aabb.valid()) {
      fail("invalid_aabb", where + ": aabb min exceeds max or non-finite");
    } else if (!inst.aabb.contains(inst.centroid)) {
      fail("centroid_outside_aabb", where + ": centroid outside aabb");
    }
    if (inst.point_count < 1) {
      fail("empty_instance", where + ": point_count must be >= 1");
    }
    if (inst.class_label.empty()) {
      fail("empty_class_label", where + ": class_label empty");
    }
  }

  std::set<std::pair<std::uint32_t, std::uint32_t>> edge_pairs;
  for (const SpatialEdge& e : g.spatial_edges) {
    const std::string where = "edge " + std::to_string(e.head) + "->" +
                              std::to_string(e.tail);
    if (e.head == e.tail) {
      fail("self_edge", where + ": head equals tail");
    }
    if (!ids.count(e.head)) {
      fail("unknown_instance_id", where + ": unknown head id");
    }
    if (!ids.count(e.tail)) {
      fail("unknown_instance_id", where + ": unknown tail id");
    }
    if (!edge_pairs.insert({e.head, e.tail}).second) {
      fail("duplicate_edge", where + ": more than one edge for ordered pair");
    }
  }

  std::set<std::uint32_t> labeled;
  for (const SemanticTriple& t : g.semantic_triples) {
    const std::string where = "triple subject " + std::to_string(t.subject);
    if (!ids.count(t.subject)) {
      fail("unknown_instance_id", where + ": unknown subject id");
    }
    if (t.value.empty()) {
      fail("empty_triple_value", where + ": empty value for " +
                                     std::string(to_string(t.attribute)));
    }
    if (t.attribute == SemanticAttribute::instance_label) {
      labeled.insert(t.subject);
    }
  }
  for (std::uint32_t id : ids) {
    if (!labeled.count(id)) {
      fail("missing_instance_label",
           "instance " + std::to_string(id) + ": no instance_label triple");
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// GraphIndex: read-only lookup structures over an immutable SceneGraph.
// Shared by binding enumeration and the oracle; safe to use from many threads.

class GraphIndex {
 public:
  explicit GraphIndex(const SceneGraph& g) : graph_(&g) {
    for (const Instance& inst : g.instances) {
      by_id_.emplace(inst.id, &inst);
      facts_[inst.id].labels.insert(inst.class_label);
      facts_[inst.id].labels.insert(inst.category_label);
    }
    for (const SemanticTriple& t : g.semantic_triples) {
      Facts& f = facts_[t.subject];
      switch (t.attribute) {
        case SemanticAttribute::instance_label:
        case SemanticAttribute::building_category_label:
          f.labels.insert(t.value);
          break;
        case SemanticAttribute::synonym_label:
          f.labels.insert(t.value);
          f.synonyms.push_back(t.value);
          break;
        case SemanticAttribute::location:
          f.location = t.value;
          break;
        case SemanticAttribute::usage_label:
          f.usages.push_back(t.value);
          break;
      }
    }
    for (const SpatialEdge& e : g.spatial_edges) {
      edges_.emplace(key(e.head, e.tail), e.relation);
    }
  }

  const SceneGraph& graph() const { return *graph_; }

  const Instance* find(std::uint32_t id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : it->second;
  }

  // Label match used by filters: class, category, or synonym.
  bool has_label(std::uint32_t id, const std::string& label) const {
    auto it = facts_.find(id);
    return it != facts_.end() && it->second.labels.count(label) > 0;
  }

  bool has_usage(std::uint32_t id, const std::string& usage) const {
    auto it = facts_.find(id);
    if (it == facts_.end()) return false;
    for (const std::string& u : it->second.usages) {
      if (u == usage) return true;
    }
    return false;
  }

  // Usage values in graph (= lexicon) order.
  const std::vector<std::string>& usages(std::uint32_t id) const {
    static const std::vector<std::string> empty;
    auto it = facts_.find(id);
    return it == facts_.end() ? empty : it->second.usages;
  }

  const std::vector<std::string>& synonyms(std::uint32_t id) const {
    static const std::vector<std::string> empty;
    auto it = facts_.find(id);
    return it == facts_.end() ? empty : it->second.synonyms;
  }

  std::string location(std::uint32_t id) const {
    auto it = facts_.find(id);
    return it == facts_.end() ? std::string{} : it->second.location;
  }

  std::optional<DirectionRelation> edge(std::uint32_t head,
                                        std::uint32_t tail) const {
    auto it = edges_.find(key(head, tail));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
  }

 private:
  struct Facts {
    std::set<std::string> labels;  // class + category + synonyms
    std::vector<std::string> synonyms;
    std::vector<std::string> usages;
    std::string location;
  };

  static std::uint64_t key(std::uint32_t head, std::uint32_t tail) {
    return (static_cast<std::uint64_t>(head) << 32) | tail;
  }

  const SceneGraph* graph_;
  std::unordered_map<std::uint32_t, const Instance*> by_id_;
  std::unordered_map<std::uint32_t, Facts> facts_;
  std::unordered_map<std::uint64_t, DirectionRelation> edges_;
};

// ---------------------------------------------------------------------------
// JSON serialization (scene graph file format)

namespace scene_json {

using nlohmann::ordered_json;

inline ordered_json vec3_to_json(const Vec3& v) {
  return ordered_json::array({v.x, v.y, v.z});
}

inline Vec3 vec3_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() ||
      !j[1].is_number() || !j[2].is_number()) {
    throw FormatError(field + ": expected array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline ordered_json instance_to_json(const Instance& inst) {
  ordered_json j;
  j["id"] = inst.id;
  j["class_label"] = inst.class_label;
  j["category_label"] = inst.category_label;
  j["centroid"] = vec3_to_json(inst.centroid);
  j["aabb"] = {{"min", vec3_to_json(inst.aabb.min)},
               {"max", vec3_to_json(inst.aabb.max)}};
  j["point_count"] = inst.point_count;
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  if (!j.contains("id") || !j["id"].is_number_unsigned()) {
    throw FormatError("instance: missing or non-integer field 'id'");
  }
  inst.id = j["id"].get<std::uint32_t>();
  for (const char* f : {"class_label", "category_label"}) {
    if (!j.contains(f) || !j[f].is_string()) {
      throw FormatError(std::string("instance: missing string field '") + f +
                        "'");
    }
  }
  inst.class_label = j["class_label"].get<std::string>();
  inst.category_label = j["category_label"].get<std::string>();
  if (!j.contains("centroid")) throw FormatError("instance: missing 'centroid'");
  inst.centroid = vec3_from_json(j["centroid"], "centroid");
  if (!j.contains("aabb") || !j["aabb"].contains("min") ||
      !j["aabb"].contains("max")) {
    throw FormatError("instance: missing 'aabb.min'/'aabb.max'");
  }
  inst.aabb.min = vec3_from_json(j["aabb"]["min"], "aabb.min");
  inst.aabb.max = vec3_from_json(j["aabb"]["max"], "aabb.max");
  if (!j.contains("point_count") || !j["point_count"].is_number_unsigned()) {
    throw FormatError("instance: missing or negative field 'point_count'");
  }
  inst.point_count = j["point_count"].get<std::uint64_t>();
  return inst;
}

}  // namespace scene_json

inline nlohmann::ordered_json scene_graph_to_json(const SceneGraph& g) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["city"] = g.city;
  j["scene_id"] = g.scene_id;
  j["instances"] = ordered_json::array();
  for (const Instance& inst : g.instances) {
    j["instances"].push_back(scene_json::instance_to_json(inst));
  }
  j["spatial_edges"] = ordered_json::array();
  for (const SpatialEdge& e : g.spatial_edges) {
    j["spatial_edges"].push_back({{"head", e.head},
                                  {"relation", to_string(e.relation)},
                                  {"tail", e.tail}});
  }
  j["semantic_triples"] = ordered_json::array();
  for (const SemanticTriple& t : g.semantic_triples) {
    j["semantic_triples"].push_back({{"subject", t.subject},
                                     {"attribute", to_string(t.attribute)},
                                     {"value", t.value}});
  }
  return j;
}

inline SceneGraph scene_graph_from_json(const nlohmann::json& j) {
  SceneGraph g;
  for (const char* f : {"city", "scene_id"}) {
    if (!j.contains(f) || !j[f].is_string()) {
      throw FormatError(std::string("scene graph: missing string field '") +
                        f + "'");
    }
  }
  g.city = j["city"].get<std::string>();
  g.scene_id = j["scene_id"].get<std::string>();
  for (const char* f : {"instances", "spatial_edges", "semantic_triples"}) {
    if (!j.contains(f) || !j[f].is_array()) {
      throw FormatError(std::string("scene graph: missing array field '") + f +
                        "'");
    }
  }
  for (const auto& ji : j["instances"]) {
    g.instances.push_back(scene_json::instance_from_json(ji));
  }
  for (const auto& je : j["spatial_edges"]) {
    if (!je.contains("head") || !je.contains("relation") ||
        !je.contains("tail")) {
      throw FormatError("spatial_edges: entry missing head/relation/tail");
    }
    auto rel = direction_from_string(je["relation"].get<std::string>());
    if (!rel) {
      throw FormatError("spatial_edges: unknown relation '" +
                        je["relation"].get<std::string>() + "'");
    }
    g.spatial_edges.push_back(
        {je["head"].get<std::uint32_t>(), *rel, je["tail"].get<std::uint32_t>()});
  }
  for (const auto& jt : j["semantic_triples"]) {
    if (!jt.contains("subject") || !jt.contains("attribute") ||
        !jt.contains("value")) {
      throw FormatError("semantic_triples: entry missing subject/attribute/value");
    }
    auto attr = attribute_from_string(jt["attribute"].get<std::string>());
    if (!attr) {
      throw FormatError("semantic_triples: unknown attribute '" +
                        jt["attribute"].get<std::string>() + "'");
    }
    g.semantic_triples.push_back({jt["subject"].get<std::uint32_t>(), *attr,
                                  jt["value"].get<std::string>()});
  }
  return g;
}

inline void write_scene_graph(const SceneGraph& g, std::ostream& out) {
  out << scene_graph_to_json(g).dump(2) << '\n';
}

inline SceneGraph read_scene_graph(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("scene graph: invalid JSON: ") + e.what());
  }
  return scene_graph_from_json(j);
}

inline SceneGraph load_scene_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scene graph file: " + path);
  return read_scene_graph(in);
}

inline void save_scene_graph(const SceneGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write scene graph file: " + path);
  write_scene_graph(g, out);
}

}  // namespace city3dqa
