#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "city3dqa/errors.hpp"

namespace city3dqa {

// Offline stand-in for the knowledge-base lookups: every label the scenes can
// mention maps to a category plus curated synonyms and usages. Keys may be
// class labels ("building") or category labels ("transportation building").
struct LexiconEntry {
  std::string category;
  std::vector<std::string> synonyms;
  std::vector<std::string> usages;
};

struct Lexicon {
  std::map<std::string, LexiconEntry> entries;

  const LexiconEntry* find(const std::string& label) const {
    auto it = entries.find(label);
    return it == entries.end() ? nullptr : &it->second;
  }

  // Category entries take precedence over class entries.
  const LexiconEntry* lookup(const std::string& category_label,
                             const std::string& class_label) const {
    if (const LexiconEntry* e = find(category_label)) return e;
    return find(class_label);
  }
};

inline Lexicon lexicon_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("lexicon: expected a JSON object");
  Lexicon lex;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const nlohmann::json& je = it.value();
    if (!je.is_object()) {
      throw FormatError("lexicon: entry '" + it.key() + "' is not an object");
    }
    LexiconEntry entry;
    entry.category = je.value("category", it.key());
    for (const char* field : {"synonyms", "usages"}) {
      if (!je.contains(field)) continue;
      if (!je[field].is_array()) {
        throw FormatError("lexicon: '" + it.key() + "." + field +
                          "' must be an array of strings");
      }
      for (const auto& v : je[field]) {
        if (!v.is_string() || v.get<std::string>().empty()) {
          throw FormatError("lexicon: '" + it.key() + "." + field +
                            "' contains an empty or non-string value");
        }
        auto& dst = std::string(field) == "synonyms" ? entry.synonyms
                                                     : entry.usages;
        dst.push_back(v.get<std::string>());
      }
    }
    lex.entries.emplace(it.key(), std::move(entry));
  }
  return lex;
}

inline nlohmann::ordered_json lexicon_to_json(const Lexicon& lex) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [label, e] : lex.entries) {
    j[label] = {{"category", e.category},
                {"synonyms", e.synonyms},
                {"usages", e.usages}};
  }
  return j;
}

inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lexicon file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("lexicon: invalid JSON: ") + e.what());
  }
  return lexicon_from_json(j);
}

// Named axis-aligned rectangular regions in scene xy coordinates. First
// region in file order wins when regions overlap.
struct Region {
  std::string name;
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;

  bool contains(double x, double y) const {
    return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
  }
};

struct RegionMap {
  std::vector<Region> regions;
};

inline RegionMap region_map_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("region map: expected a JSON array");
  RegionMap rm;
  std::map<std::string, bool> seen;
  for (const auto& jr : j) {
    if (!jr.contains("name") || !jr["name"].is_string()) {
      throw FormatError("region map: entry missing string field 'name'");
    }
    Region r;
    r.name = jr["name"].get<std::string>();
    if (seen[r.name]) throw FormatError("region map: duplicate name '" + r.name + "'");
    seen[r.name] = true;
    for (const char* axis : {"x", "y"}) {
      if (!jr.contains(axis) || !jr[axis].is_array() || jr[axis].size() != 2 ||
          !jr[axis][0].is_number() || !jr[axis][1].is_number()) {
        throw FormatError("region map: '" + r.name + "." + axis +
                          "' must be [lo, hi]");
      }
    }
    r.x_lo = jr["x"][0].get<double>();
    r.x_hi = jr["x"][1].get<double>();
    r.y_lo = jr["y"][0].get<double>();
    r.y_hi = jr["y"][1].get<double>();
    if (!(r.x_lo < r.x_hi) || !(r.y_lo < r.y_hi)) {
      throw FormatError("region map: '" + r.name + "' has a degenerate range");
    }
    rm.regions.push_back(std::move(r));
  }
  return rm;
}

inline nlohmann::ordered_json region_map_to_json(const RegionMap& rm) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const Region& r : rm.regions) {
    j.push_back({{"name", r.name},
                 {"x", {r.x_lo, r.x_hi}},
                 {"y", {r.y_lo, r.y_hi}}});
  }
  return j;
}

inline RegionMap load_region_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open region map file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("region map: invalid JSON: ") + e.what());
  }
  return region_map_from_json(j);
}

}  // namespace city3dqa
