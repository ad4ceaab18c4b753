#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "city3dqa/errors.hpp"
#include "city3dqa/geometry.hpp"
#include "city3dqa/ingest.hpp"
#include "city3dqa/lexicon.hpp"
#include "city3dqa/scene.hpp"

namespace city3dqa::semantics {

// Directions are computed in the xy-plane only; city instances are
// ground-anchored and z says nothing about "left of".
//
// "front" is anchored to the bearing given here (degrees, counterclockwise
// from +x). The default 90 puts front at +y, i.e. map north.
inline constexpr double default_front_bearing_deg = 90.0;

struct EdgePolicy {
  enum class Mode { all_pairs, k_nearest };
  Mode mode = Mode::all_pairs;
  std::uint32_t k = 1;

  static EdgePolicy all_pairs() { return {Mode::all_pairs, 0}; }
  static EdgePolicy k_nearest(std::uint32_t k) {
    if (k < 1) throw ConfigError("edge policy: k must be >= 1");
    return {Mode::k_nearest, k};
  }
};

struct SemanticsConfig {
  double front_bearing_deg = default_front_bearing_deg;
  EdgePolicy policy = EdgePolicy::all_pairs();
};

// Full-plane angle of (dx, dy), counterclockwise from +x, in [0, 360).
// A single-argument arctangent cannot tell opposite quadrants apart, so the
// two-argument form is used throughout.
inline double bearing_deg_xy(double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) {
    throw GeometryError("bearing: coincident centroids in the xy-plane");
  }
  double deg = std::atan2(dy, dx) * (180.0 / std::numbers::pi);
  if (deg < 0.0) deg += 360.0;
  if (deg >= 360.0) deg = 0.0;
  return deg;
}

inline double bearing_deg(const Instance& from, const Instance& to) {
  return bearing_deg_xy(to.centroid.x - from.centroid.x,
                        to.centroid.y - from.centroid.y);
}

// 45-degree sectors, half-open [lo, hi) with the lower bound inclusive.
// With the default front at 90: right = [337.5, 360) u [0, 22.5),
// front-right = [22.5, 67.5), front = [67.5, 112.5), and so on
// counterclockwise. All sector boundaries are exact doubles, so the index
// arithmetic below is exact at every multiple of 22.5.
inline DirectionRelation bin_direction(
    double bearing, double front_bearing = default_front_bearing_deg) {
  if (!(bearing >= 0.0 && bearing < 360.0)) {
    throw ValidationError("bin_direction: bearing outside [0, 360)");
  }
  double eff = bearing - (front_bearing - 90.0);
  eff = std::fmod(std::fmod(eff, 360.0) + 360.0, 360.0);
  double shifted = std::fmod(eff + 22.5, 360.0);
  int idx = static_cast<int>(shifted / 45.0);
  if (idx > 7) idx = 7;  // guards eff just below 360 rounding up
  return static_cast<DirectionRelation>(idx);
}

inline DirectionRelation inverse_relation(DirectionRelation r) {
  return opposite(r);
}

// Edge (i, r, j): from i's position, j lies toward r.
inline SpatialEdge spatial_relation(
    const Instance& i, const Instance& j,
    double front_bearing = default_front_bearing_deg) {
  if (i.id == j.id) {
    throw ValidationError("spatial_relation: identical instances");
  }
  return {i.id, bin_direction(bearing_deg(i, j), front_bearing), j.id};
}

struct SkippedPair {
  std::uint32_t head = 0;
  std::uint32_t tail = 0;
  std::string reason;
};

struct EdgeBuildResult {
  std::vector<SpatialEdge> edges;
  std::vector<SkippedPair> skipped;
};

// all_pairs: one edge per ordered pair (i, j), i != j — n(n-1) edges when no
// pair is xy-coincident. k_nearest: edges from each instance to its k nearest
// neighbors by centroid distance (ties broken by id). Output sorted by
// (head id, tail id).
inline EdgeBuildResult build_spatial_edges(
    const std::vector<Instance>& instances, const EdgePolicy& policy,
    double front_bearing = default_front_bearing_deg) {
  EdgeBuildResult result;
  std::vector<const Instance*> order;
  order.reserve(instances.size());
  for (const Instance& inst : instances) order.push_back(&inst);
  std::sort(order.begin(), order.end(),
            [](const Instance* a, const Instance* b) { return a->id < b->id; });

  auto try_edge = [&](const Instance& head, const Instance& tail) {
    try {
      result.edges.push_back(spatial_relation(head, tail, front_bearing));
    } catch (const GeometryError& e) {
      result.skipped.push_back({head.id, tail.id, e.what()});
    }
  };

  if (policy.mode == EdgePolicy::Mode::all_pairs) {
    for (const Instance* a : order) {
      for (const Instance* b : order) {
        if (a->id == b->id) continue;
        try_edge(*a, *b);
      }
    }
  } else {
    for (const Instance* a : order) {
      std::vector<std::pair<double, const Instance*>> near;
      near.reserve(order.size());
      for (const Instance* b : order) {
        if (a->id == b->id) continue;
        near.emplace_back(euclidean_distance(a->centroid, b->centroid), b);
      }
      std::sort(near.begin(), near.end(),
                [](const auto& x, const auto& y) {
                  if (x.first != y.first) return x.first < y.first;
                  return x.second->id < y.second->id;
                });
      const std::size_t take = std::min<std::size_t>(policy.k, near.size());
      for (std::size_t i = 0; i < take; ++i) try_edge(*a, *near[i].second);
    }
    std::sort(result.edges.begin(), result.edges.end(),
              [](const SpatialEdge& x, const SpatialEdge& y) {
                if (x.head != y.head) return x.head < y.head;
                return x.tail < y.tail;
              });
  }
  return result;
}

// Union of instance boxes; the quadrant fallback is measured from its center.
inline Aabb scene_bounds(const std::vector<Instance>& instances) {
  Aabb bounds;
  bool first = true;
  for (const Instance& inst : instances) {
    if (first) {
      bounds = inst.aabb;
      first = false;
    } else {
      bounds.expand(inst.aabb);
    }
  }
  return bounds;
}

// First region (file order) containing the centroid's (x, y); otherwise a
// quadrant name relative to the scene bounds center, with +y as north.
inline std::string assign_location(const Instance& inst, const RegionMap& rm,
                                   const Aabb& bounds) {
  for (const Region& r : rm.regions) {
    if (r.contains(inst.centroid.x, inst.centroid.y)) return r.name;
  }
  const Vec3 c = bounds.center();
  const bool north = inst.centroid.y >= c.y;
  const bool west = inst.centroid.x < c.x;
  if (north) return west ? "northwest area" : "northeast area";
  return west ? "southwest area" : "southeast area";
}

// Per instance: one instance_label triple, one building_category_label, one
// location, then the lexicon's synonyms and usages in file order.
inline std::vector<SemanticTriple> attach_semantics(
    const std::vector<Instance>& instances, const Lexicon& lexicon,
    const RegionMap& region_map) {
  std::set<std::string> unknown;
  for (const Instance& inst : instances) {
    if (!lexicon.lookup(inst.category_label, inst.class_label)) {
      unknown.insert(inst.class_label);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "lexicon is missing entries for:";
    for (const std::string& label : unknown) msg += " '" + label + "'";
    throw ConfigError(msg);
  }

  const Aabb bounds = scene_bounds(instances);
  std::vector<SemanticTriple> triples;
  for (const Instance& inst : instances) {
    const LexiconEntry* entry =
        lexicon.lookup(inst.category_label, inst.class_label);
    triples.push_back(
        {inst.id, SemanticAttribute::instance_label, inst.class_label});
    triples.push_back({inst.id, SemanticAttribute::building_category_label,
                       inst.category_label});
    triples.push_back({inst.id, SemanticAttribute::location,
                       assign_location(inst, region_map, bounds)});
    for (const std::string& syn : entry->synonyms) {
      triples.push_back({inst.id, SemanticAttribute::synonym_label, syn});
    }
    for (const std::string& usage : entry->usages) {
      triples.push_back({inst.id, SemanticAttribute::usage_label, usage});
    }
  }
  return triples;
}

struct SceneGraphBuild {
  SceneGraph graph;
  std::vector<SkippedPair> skipped_pairs;
};

inline SceneGraphBuild build_scene_graph(const ingest::SceneManifest& manifest,
                                         const Lexicon& lexicon,
                                         const RegionMap& region_map,
                                         const SemanticsConfig& config = {}) {
  SceneGraphBuild build;
  build.graph.city = manifest.city;
  build.graph.scene_id = manifest.scene_id;
  build.graph.instances = manifest.instances;
  EdgeBuildResult edges = build_spatial_edges(
      manifest.instances, config.policy, config.front_bearing_deg);
  build.graph.spatial_edges = std::move(edges.edges);
  build.skipped_pairs = std::move(edges.skipped);
  build.graph.semantic_triples =
      attach_semantics(manifest.instances, lexicon, region_map);
  return build;
}

}  // namespace city3dqa::semantics
