#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "city3dqa/errors.hpp"
#include "city3dqa/geometry.hpp"
#include "city3dqa/scene.hpp"
#include "city3dqa/templates.hpp"

namespace city3dqa::oracle {

using templates::AnswerKind;
using templates::Binding;
using templates::QuestionTemplate;
using templates::SlotKind;

struct Answer {
  AnswerKind kind = AnswerKind::yes_no;
  std::string value;

  friend bool operator==(const Answer&, const Answer&) = default;
};

struct OracleParams {
  double near_radius = 100.0;     // meters, "near" in density questions
  double tie_tolerance = 1e-9;    // meters, distance-comparison ties
};

// Instance filter; label matching covers class, category and synonyms.
struct Filter {
  std::optional<std::string> label;
  std::optional<std::string> usage;
  std::optional<std::string> location;

  bool any() const { return label || usage || location; }

  bool matches(const GraphIndex& idx, std::uint32_t id) const {
    if (label && !idx.has_label(id, *label)) return false;
    if (usage && !idx.has_usage(id, *usage)) return false;
    if (location && idx.location(id) != *location) return false;
    return true;
  }
};

// A reference to (hopefully) exactly one instance: by id, by label with an
// optional location qualifier, or by usage. `display` is the surface form
// used when the reference itself is an answer.
struct InstanceRef {
  std::optional<std::uint32_t> id;
  std::optional<std::string> label;
  std::optional<std::string> location;
  std::optional<std::string> usage;
  std::string display;

  static InstanceRef by_id(std::uint32_t id, std::string display = {}) {
    InstanceRef r;
    r.id = id;
    r.display = std::move(display);
    return r;
  }
  static InstanceRef by_label(std::string label,
                              std::optional<std::string> location = {},
                              std::string display = {}) {
    InstanceRef r;
    r.display = display.empty() ? label : std::move(display);
    r.label = std::move(label);
    r.location = std::move(location);
    return r;
  }
  static InstanceRef by_usage(std::string usage) {
    InstanceRef r;
    r.usage = std::move(usage);
    r.display = r.usage.value();
    return r;
  }

  std::string describe() const {
    if (!display.empty()) return display;
    if (id) return "instance " + std::to_string(*id);
    return "<empty reference>";
  }
};

inline const Instance& resolve_reference(const GraphIndex& idx,
                                         const InstanceRef& ref) {
  if (ref.id) {
    const Instance* inst = idx.find(*ref.id);
    if (!inst) {
      throw ReferenceError("unknown instance id " + std::to_string(*ref.id));
    }
    return *inst;
  }
  if (!ref.label && !ref.usage) {
    throw ValidationError("empty instance reference");
  }
  const Instance* found = nullptr;
  int matches = 0;
  for (const Instance& inst : idx.graph().instances) {
    bool ok = true;
    if (ref.label) ok = idx.has_label(inst.id, *ref.label);
    if (ok && ref.location) ok = idx.location(inst.id) == *ref.location;
    if (ok && ref.usage) ok = idx.has_usage(inst.id, *ref.usage);
    if (ok) {
      ++matches;
      found = &inst;
    }
  }
  if (matches == 0) {
    throw ReferenceError("no instance matches reference '" + ref.describe() +
                         "'");
  }
  if (matches > 1) {
    throw ReferenceError("reference '" + ref.describe() + "' is ambiguous (" +
                         std::to_string(matches) + " candidates)");
  }
  return *found;
}

// ---------------------------------------------------------------------------
// Answer operations

inline Answer answer_existence(const GraphIndex& idx, const Filter& f) {
  if (!f.any()) throw ValidationError("filter with no fields set");
  for (const Instance& inst : idx.graph().instances) {
    if (f.matches(idx, inst.id)) return {AnswerKind::yes_no, "yes"};
  }
  return {AnswerKind::yes_no, "no"};
}

inline Answer answer_count(const GraphIndex& idx, const Filter& f) {
  if (!f.any()) throw ValidationError("filter with no fields set");
  std::uint64_t n = 0;
  for (const Instance& inst : idx.graph().instances) {
    if (f.matches(idx, inst.id)) ++n;
  }
  return {AnswerKind::count, std::to_string(n)};
}

inline Answer answer_attribute(const GraphIndex& idx, const InstanceRef& ref,
                               SemanticAttribute attr) {
  const Instance& inst = resolve_reference(idx, ref);
  if (attr == SemanticAttribute::usage_label) {
    const auto& usages = idx.usages(inst.id);
    if (usages.empty()) {
      throw ReferenceError("reference '" + ref.describe() +
                           "' resolves to an instance with no usage values");
    }
    std::string joined;
    for (const std::string& u : usages) {
      if (!joined.empty()) joined += ", ";
      joined += u;
    }
    return {AnswerKind::usage_value, joined};
  }
  if (attr == SemanticAttribute::location) {
    std::string loc = idx.location(inst.id);
    if (loc.empty()) {
      throw ReferenceError("reference '" + ref.describe() +
                           "' resolves to an instance with no location");
    }
    return {AnswerKind::location_value, loc};
  }
  throw ValidationError("answer_attribute supports usage_label and location");
}

// "In which direction is a relative to b": the stored edge (b, r, a).
inline Answer answer_direction(const GraphIndex& idx, const InstanceRef& a_ref,
                               const InstanceRef& b_ref) {
  const Instance& a = resolve_reference(idx, a_ref);
  const Instance& b = resolve_reference(idx, b_ref);
  if (a.id == b.id) {
    throw ReferenceError("direction query needs two distinct instances");
  }
  if (auto rel = idx.edge(b.id, a.id)) {
    return {AnswerKind::direction_value, std::string(to_string(*rel))};
  }
  if (a.centroid.x == b.centroid.x && a.centroid.y == b.centroid.y) {
    throw GeometryError("coincident centroids in the xy-plane");
  }
  throw ReferenceError("no spatial edge from instance " +
                       std::to_string(b.id) + " to instance " +
                       std::to_string(a.id));
}

enum class DistanceMode { nearest, farther_bool };

inline Answer answer_distance_comparison(const GraphIndex& idx,
                                         const InstanceRef& ref,
                                         const InstanceRef& a_ref,
                                         const InstanceRef& b_ref,
                                         DistanceMode mode,
                                         const OracleParams& params = {}) {
  const Instance& anchor = resolve_reference(idx, ref);
  const Instance& a = resolve_reference(idx, a_ref);
  const Instance& b = resolve_reference(idx, b_ref);
  if (a.id == b.id) {
    throw ReferenceError("distance comparison needs two distinct instances");
  }
  const double da = euclidean_distance(anchor.centroid, a.centroid);
  const double db = euclidean_distance(anchor.centroid, b.centroid);
  if (mode == DistanceMode::farther_bool) {
    return {AnswerKind::yes_no, da > db + params.tie_tolerance ? "yes" : "no"};
  }
  if (std::abs(da - db) <= params.tie_tolerance) {
    return {AnswerKind::instance_choice, "equal"};
  }
  return {AnswerKind::instance_choice,
          da < db ? a_ref.describe() : b_ref.describe()};
}

// Instances of `class_label` with centroid within `radius` of each side;
// the compared anchors themselves do not count.
inline Answer answer_density_comparison(const GraphIndex& idx,
                                        const std::string& class_label,
                                        const InstanceRef& a_ref,
                                        const InstanceRef& b_ref,
                                        double radius) {
  if (!(radius > 0.0)) {
    throw ValidationError("density comparison needs a positive radius");
  }
  const Instance& a = resolve_reference(idx, a_ref);
  const Instance& b = resolve_reference(idx, b_ref);
  if (a.id == b.id) {
    throw ReferenceError("density comparison needs two distinct instances");
  }
  std::uint64_t na = 0, nb = 0;
  for (const Instance& inst : idx.graph().instances) {
    if (inst.id == a.id || inst.id == b.id) continue;
    if (inst.class_label != class_label) continue;
    if (euclidean_distance(inst.centroid, a.centroid) <= radius) ++na;
    if (euclidean_distance(inst.centroid, b.centroid) <= radius) ++nb;
  }
  if (na == nb) return {AnswerKind::instance_choice, "equal"};
  return {AnswerKind::instance_choice,
          na > nb ? a_ref.describe() : b_ref.describe()};
}

// Exactly one side carries the usage -> that side; both -> "both" unless a
// reference instance breaks the tie by distance; neither -> "neither".
inline Answer answer_usage_selection(
    const GraphIndex& idx, const std::string& usage, const InstanceRef& a_ref,
    const InstanceRef& b_ref,
    const std::optional<InstanceRef>& tie_ref = std::nullopt,
    const OracleParams& params = {}) {
  const Instance& a = resolve_reference(idx, a_ref);
  const Instance& b = resolve_reference(idx, b_ref);
  if (a.id == b.id) {
    throw ReferenceError("usage selection needs two distinct instances");
  }
  const bool ha = idx.has_usage(a.id, usage);
  const bool hb = idx.has_usage(b.id, usage);
  if (ha && !hb) return {AnswerKind::instance_choice, a_ref.describe()};
  if (hb && !ha) return {AnswerKind::instance_choice, b_ref.describe()};
  if (!ha && !hb) return {AnswerKind::instance_choice, "neither"};
  if (tie_ref) {
    const Instance& anchor = resolve_reference(idx, *tie_ref);
    const double da = euclidean_distance(anchor.centroid, a.centroid);
    const double db = euclidean_distance(anchor.centroid, b.centroid);
    if (std::abs(da - db) > params.tie_tolerance) {
      return {AnswerKind::instance_choice,
              da < db ? a_ref.describe() : b_ref.describe()};
    }
  }
  return {AnswerKind::instance_choice, "both"};
}

inline Answer answer_location_selection(const GraphIndex& idx,
                                        const std::string& location,
                                        const InstanceRef& a_ref,
                                        const InstanceRef& b_ref) {
  const Instance& a = resolve_reference(idx, a_ref);
  const Instance& b = resolve_reference(idx, b_ref);
  if (a.id == b.id) {
    throw ReferenceError("location selection needs two distinct instances");
  }
  const bool la = idx.location(a.id) == location;
  const bool lb = idx.location(b.id) == location;
  if (la && !lb) return {AnswerKind::instance_choice, a_ref.describe()};
  if (lb && !la) return {AnswerKind::instance_choice, b_ref.describe()};
  return {AnswerKind::instance_choice, la ? "both" : "neither"};
}

// "<a>: <usages of a minus b's>; <b>: <usages of b minus a's>", each side in
// its own graph (= lexicon) order, "none" for an empty difference.
inline Answer answer_usage_difference(const GraphIndex& idx,
                                      const InstanceRef& a_ref,
                                      const InstanceRef& b_ref) {
  const Instance& a = resolve_reference(idx, a_ref);
  const Instance& b = resolve_reference(idx, b_ref);
  if (a.id == b.id) {
    throw ReferenceError("usage difference needs two distinct instances");
  }
  auto one_sided = [&](std::uint32_t keep, std::uint32_t remove) {
    std::string joined;
    std::set<std::string> seen;
    for (const std::string& u : idx.usages(keep)) {
      if (idx.has_usage(remove, u) || !seen.insert(u).second) continue;
      if (!joined.empty()) joined += ", ";
      joined += u;
    }
    return joined.empty() ? std::string("none") : joined;
  };
  std::string value = a_ref.describe() + ": " + one_sided(a.id, b.id) + "; " +
                      b_ref.describe() + ": " + one_sided(b.id, a.id);
  return {AnswerKind::usage_diff, value};
}

// ---------------------------------------------------------------------------
// Dispatcher

namespace detail {

inline const templates::BoundSlot& need_slot(const Binding& b, SlotKind k) {
  const templates::BoundSlot* s = b.find(k);
  if (!s) {
    throw ReferenceError("binding is missing the " +
                         std::string(templates::slot_key(k)) + " slot");
  }
  return *s;
}

inline InstanceRef ref_of(const Binding& b, SlotKind k) {
  const templates::BoundSlot& s = need_slot(b, k);
  if (s.instance_id) return InstanceRef::by_id(*s.instance_id, s.surface);
  return InstanceRef::by_label(s.value, std::nullopt, s.surface);
}

}  // namespace detail

inline Answer answer(const GraphIndex& idx, const QuestionTemplate& t,
                     const Binding& binding, const OracleParams& params = {}) {
  using S = templates::TemplateSemantics;
  using detail::need_slot;
  using detail::ref_of;
  auto value_of = [&](SlotKind k) { return need_slot(binding, k).value; };

  switch (t.semantics) {
    case S::exist_label:
      return answer_existence(idx, {value_of(SlotKind::instance_label), {}, {}});
    case S::count_label:
      return answer_count(idx, {value_of(SlotKind::instance_label), {}, {}});
    case S::exist_label_usage:
      return answer_existence(idx, {value_of(SlotKind::instance_label),
                                    value_of(SlotKind::usage), {}});
    case S::count_label_usage:
      return answer_count(idx, {value_of(SlotKind::instance_label),
                                value_of(SlotKind::usage), {}});
    case S::count_usage:
      return answer_count(idx, {{}, value_of(SlotKind::usage), {}});
    case S::exist_usage:
      return answer_existence(idx, {{}, value_of(SlotKind::usage), {}});
    case S::exist_label_location:
      return answer_existence(idx, {value_of(SlotKind::instance_label), {},
                                    value_of(SlotKind::location)});
    case S::count_label_location:
      return answer_count(idx, {value_of(SlotKind::instance_label), {},
                                value_of(SlotKind::location)});
    case S::exist_usage_location:
      return answer_existence(idx, {{}, value_of(SlotKind::usage),
                                    value_of(SlotKind::location)});
    case S::count_usage_location:
      return answer_count(idx, {{}, value_of(SlotKind::usage),
                                value_of(SlotKind::location)});
    case S::usage_of_instance:
      return answer_attribute(idx, ref_of(binding, SlotKind::instance_label),
                              SemanticAttribute::usage_label);
    case S::location_of_instance:
      return answer_attribute(idx, ref_of(binding, SlotKind::instance_label),
                              SemanticAttribute::location);
    case S::location_of_usage:
      return answer_attribute(
          idx, InstanceRef::by_usage(value_of(SlotKind::usage)),
          SemanticAttribute::location);
    case S::nearest_of_two:
    case S::quicker_to_reach:
      // straight-line centroid distance stands in for travel time
      return answer_distance_comparison(
          idx, ref_of(binding, SlotKind::instance_label),
          ref_of(binding, SlotKind::instance_label_1),
          ref_of(binding, SlotKind::instance_label_2), DistanceMode::nearest,
          params);
    case S::farther_than:
      return answer_distance_comparison(
          idx, ref_of(binding, SlotKind::instance_label),
          ref_of(binding, SlotKind::instance_label_1),
          ref_of(binding, SlotKind::instance_label_2),
          DistanceMode::farther_bool, params);
    case S::direction_between:
      return answer_direction(idx, ref_of(binding, SlotKind::instance_label_1),
                              ref_of(binding, SlotKind::instance_label_2));
    case S::density_comparison:
      return answer_density_comparison(
          idx, value_of(SlotKind::type_of_instance),
          ref_of(binding, SlotKind::instance_label_1),
          ref_of(binding, SlotKind::instance_label_2), params.near_radius);
    case S::location_selection:
      return answer_location_selection(
          idx, value_of(SlotKind::location),
          ref_of(binding, SlotKind::instance_label_1),
          ref_of(binding, SlotKind::instance_label_2));
    case S::usage_difference:
      return answer_usage_difference(
          idx, ref_of(binding, SlotKind::instance_label_1),
          ref_of(binding, SlotKind::instance_label_2));
    case S::usage_selection:
      return answer_usage_selection(
          idx, value_of(SlotKind::usage),
          ref_of(binding, SlotKind::instance_label_1),
          ref_of(binding, SlotKind::instance_label_2), std::nullopt, params);
  }
  throw RegistryError("template " + t.id + " has unknown semantics");
}

inline Answer answer(const GraphIndex& idx, std::string_view template_id,
                     const Binding& binding, const OracleParams& params = {},
                     const std::vector<QuestionTemplate>* registry = nullptr) {
  const QuestionTemplate* t = nullptr;
  if (registry) {
    for (const QuestionTemplate& cand : *registry) {
      if (cand.id == template_id) {
        t = &cand;
        break;
      }
    }
  } else {
    t = templates::find_template(template_id);
  }
  if (!t) {
    throw RegistryError("unknown template id '" + std::string(template_id) +
                        "'");
  }
  return answer(idx, *t, binding, params);
}

inline Answer answer(const SceneGraph& g, std::string_view template_id,
                     const Binding& binding, const OracleParams& params = {}) {
  GraphIndex idx(g);
  return answer(idx, template_id, binding, params);
}

}  // namespace city3dqa::oracle
