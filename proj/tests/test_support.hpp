#pragma once

// Shared fixtures: hand-built scenes for the worked examples and a seeded
// random scene generator for property tests.

#include <string>
#include <vector>

#include "city3dqa/ingest.hpp"
#include "city3dqa/lexicon.hpp"
#include "city3dqa/rng.hpp"
#include "city3dqa/scene.hpp"
#include "city3dqa/semantics.hpp"

namespace testsupport {

using namespace city3dqa;

inline Instance make_instance(std::uint32_t id, std::string class_label,
                              std::string category, double x, double y,
                              double z = 0.0, double half = 2.0) {
  Instance inst;
  inst.id = id;
  inst.class_label = std::move(class_label);
  inst.category_label = std::move(category);
  inst.centroid = {x, y, z};
  inst.aabb = {{x - half, y - half, z - half}, {x + half, y + half, z + half}};
  inst.point_count = 10;
  return inst;
}

struct SceneBundle {
  ingest::SceneManifest manifest;
  Lexicon lexicon;
  RegionMap regions;
  SceneGraph graph;
};

struct ClassSpec {
  const char* class_label;
  const char* category;
  std::vector<const char*> synonyms;
  std::vector<const char*> usages;
};

inline const std::vector<ClassSpec>& class_pool() {
  static const std::vector<ClassSpec> pool = {
      {"building", "residential building", {"housing block"},
       {"living space"}},
      {"building2", "transportation building", {"terminal"},
       {"buying tickets", "catching a bus"}},
      {"building3", "commercial building", {"shopping mall"},
       {"shopping", "dining"}},
      {"boat", "boat", {"vessel"}, {"fishing"}},
      {"vehicle", "vehicle", {}, {"driving"}},
      {"vegetation", "tree", {}, {}},
      {"bridge", "bridge", {}, {"crossing the river"}},
      {"building4", "cultural building", {"museum hall"},
       {"visiting exhibitions"}},
  };
  return pool;
}

inline Lexicon pool_lexicon() {
  Lexicon lex;
  for (const ClassSpec& spec : class_pool()) {
    LexiconEntry entry;
    entry.category = spec.category;
    for (const char* s : spec.synonyms) entry.synonyms.push_back(s);
    for (const char* u : spec.usages) entry.usages.push_back(u);
    lex.entries[spec.class_label] = entry;
    lex.entries[spec.category] = entry;
  }
  return lex;
}

// Seeded random scene: up to max_instances instances over up to max_classes
// distinct classes, random rectangular regions, the pooled lexicon.
inline SceneBundle random_scene(Rng& rng, std::size_t max_instances = 12,
                                std::size_t max_classes = 4,
                                std::string city = "Qingdao",
                                std::string scene_id = "scene-0") {
  SceneBundle bundle;
  bundle.lexicon = pool_lexicon();

  const std::size_t n_regions = rng.bounded(3);
  for (std::size_t r = 0; r < n_regions; ++r) {
    Region region;
    region.name = r == 0 ? "harbor district" : "old town " + std::to_string(r);
    region.x_lo = 100.0 * static_cast<double>(rng.bounded(5));
    region.x_hi = region.x_lo + 150.0 + static_cast<double>(rng.bounded(200));
    region.y_lo = 100.0 * static_cast<double>(rng.bounded(5));
    region.y_hi = region.y_lo + 150.0 + static_cast<double>(rng.bounded(200));
    bundle.regions.regions.push_back(std::move(region));
  }

  const std::size_t n_classes = 1 + rng.bounded(max_classes);
  const std::size_t n_instances = 1 + rng.bounded(max_instances);
  bundle.manifest.city = std::move(city);
  bundle.manifest.scene_id = std::move(scene_id);
  for (std::size_t c = 0; c < class_pool().size(); ++c) {
    bundle.manifest.class_map[static_cast<std::uint32_t>(c)] =
        class_pool()[c].class_label;
  }
  for (std::size_t i = 0; i < n_instances; ++i) {
    const std::size_t cls = rng.bounded(n_classes);
    const ClassSpec& spec = class_pool()[cls];
    const double x = rng.unit() * 1000.0;
    const double y = rng.unit() * 1000.0;
    const double z = rng.unit() * 30.0;
    bundle.manifest.instances.push_back(make_instance(
        static_cast<std::uint32_t>(i), spec.class_label, spec.category, x, y,
        z));
  }

  bundle.graph = semantics::build_scene_graph(bundle.manifest, bundle.lexicon,
                                              bundle.regions)
                     .graph;
  return bundle;
}

// One boat, nothing else. The smallest useful scene.
inline SceneBundle boat_scene() {
  SceneBundle bundle;
  bundle.lexicon = pool_lexicon();
  bundle.manifest.city = "Qingdao";
  bundle.manifest.scene_id = "harbor-1";
  bundle.manifest.class_map[3] = "boat";
  bundle.manifest.instances.push_back(
      make_instance(0, "boat", "boat", 10.0, 20.0, 0.0));
  bundle.graph = semantics::build_scene_graph(bundle.manifest, bundle.lexicon,
                                              bundle.regions)
                     .graph;
  return bundle;
}

}  // namespace testsupport
