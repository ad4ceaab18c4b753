#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "city3dqa/detail/parallel.hpp"
#include "city3dqa/errors.hpp"
#include "city3dqa/normalize.hpp"
#include "city3dqa/oracle.hpp"
#include "city3dqa/rng.hpp"
#include "city3dqa/scene.hpp"
#include "city3dqa/templates.hpp"

namespace city3dqa::dataset {

using oracle::Answer;
using oracle::OracleParams;
using templates::Binding;
using templates::Hops;
using templates::QuestionCategory;
using templates::QuestionTemplate;

struct QaPair {
  std::string qid;
  std::string city;
  std::string scene_id;
  QuestionCategory category = QuestionCategory::instance_identification;
  Hops hops = Hops::single;
  std::string question;
  Answer answer;
  std::string template_id;
  Binding binding;
  OracleParams oracle_params;
  bool paraphrased = false;
};

// Content hash over everything the oracle needs to reproduce the pair, so
// regeneration is idempotent and prediction files can be diffed across runs.
inline std::string compute_qid(const std::string& city,
                               const std::string& scene_id,
                               const std::string& template_id,
                               const Binding& binding) {
  std::string payload;
  payload.reserve(64);
  payload += city;
  payload += '\x1f';
  payload += scene_id;
  payload += '\x1f';
  payload += template_id;
  payload += '\x1f';
  payload += binding.canonical_key();
  const std::uint64_t h = fnv1a64(payload);
  char hex[17];
  static const char digits[] = "0123456789abcdef";
  for (int i = 0; i < 16; ++i) {
    hex[i] = digits[(h >> (60 - 4 * i)) & 0xf];
  }
  hex[16] = '\0';
  return hex;
}

// ---------------------------------------------------------------------------
// Generation

struct GenerateConfig {
  std::uint64_t seed = 0;
  // unset -> per-category defaults below
  std::optional<std::size_t> per_template_limit;
  double synonym_probability = 0.3;
  OracleParams oracle;
};

// Default caps lean toward the comparison-heavy mix the source corpus
// reports; the realized distribution depends on scene content and is
// reported by `stats`, never enforced.
inline std::size_t category_default_limit(QuestionCategory c) {
  switch (c) {
    case QuestionCategory::instance_identification: return 8;
    case QuestionCategory::usage_inquiry: return 5;
    case QuestionCategory::relationship: return 20;
    case QuestionCategory::spatial_comparison: return 23;
    case QuestionCategory::usage_comparison: return 20;
  }
  return 8;
}

struct GenerateResult {
  std::vector<QaPair> pairs;
  std::vector<std::string> skipped;  // one reason per rejected binding
};

inline GenerateResult generate_pairs(const SceneGraph& g,
                                     const std::vector<QuestionTemplate>& registry,
                                     const GenerateConfig& config) {
  GenerateResult result;
  templates::SceneFacts facts(g);
  const std::uint64_t scene_seed =
      derive_seed(config.seed, g.city + "/" + g.scene_id);
  for (const QuestionTemplate& t : registry) {
    const std::size_t limit = config.per_template_limit
                                  ? *config.per_template_limit
                                  : category_default_limit(t.category);
    std::vector<Binding> bindings = templates::enumerate_bindings(
        t, facts, scene_seed, limit, config.synonym_probability);
    for (Binding& b : bindings) {
      QaPair pair;
      pair.city = g.city;
      pair.scene_id = g.scene_id;
      pair.category = t.category;
      pair.hops = t.hops;
      pair.template_id = t.id;
      pair.oracle_params = config.oracle;
      try {
        pair.question = templates::instantiate(t, b);
        pair.answer = oracle::answer(facts.index(), t, b, config.oracle);
      } catch (const std::exception& e) {
        result.skipped.push_back(t.id + ": " + e.what());
        continue;
      }
      pair.binding = std::move(b);
      pair.qid = compute_qid(pair.city, pair.scene_id, t.id, pair.binding);
      result.pairs.push_back(std::move(pair));
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const QaPair& a, const QaPair& b) {
              if (a.template_id != b.template_id) {
                return a.template_id < b.template_id;
              }
              return a.binding.canonical_key() < b.binding.canonical_key();
            });
  return result;
}

// Many scenes, worker pool, deterministic output: scenes are processed in
// (city, scene_id) order and concatenated by index, so the result does not
// depend on the worker count.
inline GenerateResult generate_dataset(
    const std::vector<const SceneGraph*>& graphs,
    const std::vector<QuestionTemplate>& registry, const GenerateConfig& config,
    unsigned jobs = 1) {
  std::vector<const SceneGraph*> order = graphs;
  std::sort(order.begin(), order.end(),
            [](const SceneGraph* a, const SceneGraph* b) {
              if (a->city != b->city) return a->city < b->city;
              return a->scene_id < b->scene_id;
            });
  std::vector<GenerateResult> per_scene(order.size());
  detail::parallel_for_indexed(order.size(), jobs, [&](std::size_t i) {
    per_scene[i] = generate_pairs(*order[i], registry, config);
  });
  GenerateResult merged;
  for (GenerateResult& r : per_scene) {
    std::move(r.pairs.begin(), r.pairs.end(), std::back_inserter(merged.pairs));
    std::move(r.skipped.begin(), r.skipped.end(),
              std::back_inserter(merged.skipped));
  }
  return merged;
}

// Exact (question, answer, scene) duplicates collapse to the first occurrence.
inline std::vector<QaPair> dedup_pairs(std::vector<QaPair> pairs) {
  std::set<std::string> seen;
  std::vector<QaPair> out;
  out.reserve(pairs.size());
  for (QaPair& p : pairs) {
    std::string key = p.question;
    key += '\x1f';
    key += p.answer.value;
    key += '\x1f';
    key += p.city;
    key += '\x1f';
    key += p.scene_id;
    if (seen.insert(std::move(key)).second) out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Answer space

struct AnswerSpace {
  // (normalized answer, frequency), sorted by descending frequency then
  // lexicographic
  std::vector<std::pair<std::string, std::uint64_t>> entries;

  bool contains(const std::string& normalized) const {
    for (const auto& [value, count] : entries) {
      if (value == normalized) return true;
    }
    return false;
  }
};

inline AnswerSpace build_answer_space(const std::vector<QaPair>& pairs) {
  std::map<std::string, std::uint64_t> counts;
  for (const QaPair& p : pairs) {
    ++counts[evalh::normalize_answer(p.answer.value)];
  }
  AnswerSpace space;
  space.entries.assign(counts.begin(), counts.end());
  std::sort(space.entries.begin(), space.entries.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return space;
}

inline nlohmann::ordered_json answer_space_to_json(const AnswerSpace& space) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [value, count] : space.entries) {
    arr.push_back({{"answer", value}, {"count", count}});
  }
  return nlohmann::ordered_json{{"answers", std::move(arr)}};
}

inline AnswerSpace answer_space_from_json(const nlohmann::json& j) {
  if (!j.contains("answers") || !j["answers"].is_array()) {
    throw FormatError("answer space: missing array field 'answers'");
  }
  AnswerSpace space;
  for (const auto& je : j["answers"]) {
    if (!je.contains("answer") || !je.contains("count")) {
      throw FormatError("answer space: entry missing 'answer'/'count'");
    }
    space.entries.emplace_back(je["answer"].get<std::string>(),
                               je["count"].get<std::uint64_t>());
  }
  return space;
}

inline AnswerSpace load_answer_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open answer space file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("answer space: invalid JSON: ") + e.what());
  }
  return answer_space_from_json(j);
}

// ---------------------------------------------------------------------------
// Serialization (JSON lines, one QaPair per line)

inline nlohmann::ordered_json pair_to_json(const QaPair& p) {
  nlohmann::ordered_json j;
  j["qid"] = p.qid;
  j["city"] = p.city;
  j["scene_id"] = p.scene_id;
  j["category"] = templates::to_string(p.category);
  j["hops"] = templates::to_string(p.hops);
  j["question"] = p.question;
  j["answer"] = {{"kind", templates::to_string(p.answer.kind)},
                 {"value", p.answer.value}};
  j["provenance"] = {
      {"template_id", p.template_id},
      {"binding", templates::binding_to_json(p.binding)},
      {"oracle_params",
       {{"near_radius", p.oracle_params.near_radius},
        {"tie_tolerance", p.oracle_params.tie_tolerance}}}};
  j["paraphrased"] = p.paraphrased;
  return j;
}

inline QaPair pair_from_json(const nlohmann::json& j) {
  QaPair p;
  for (const char* f : {"qid", "city", "scene_id", "category", "hops",
                        "question"}) {
    if (!j.contains(f) || !j[f].is_string()) {
      throw FormatError(std::string("qa pair: missing string field '") + f +
                        "'");
    }
  }
  p.qid = j["qid"].get<std::string>();
  p.city = j["city"].get<std::string>();
  p.scene_id = j["scene_id"].get<std::string>();
  auto cat = templates::category_from_string(j["category"].get<std::string>());
  auto hops = templates::hops_from_string(j["hops"].get<std::string>());
  if (!cat || !hops) {
    throw FormatError("qa pair: unknown category or hops value");
  }
  p.category = *cat;
  p.hops = *hops;
  p.question = j["question"].get<std::string>();
  if (!j.contains("answer") || !j["answer"].contains("kind") ||
      !j["answer"].contains("value")) {
    throw FormatError("qa pair: missing 'answer.kind'/'answer.value'");
  }
  auto kind =
      templates::answer_kind_from_string(j["answer"]["kind"].get<std::string>());
  if (!kind) throw FormatError("qa pair: unknown answer kind");
  p.answer.kind = *kind;
  p.answer.value = j["answer"]["value"].get<std::string>();
  if (p.answer.value.empty()) throw FormatError("qa pair: empty answer value");
  if (!j.contains("provenance")) {
    throw FormatError("qa pair: missing 'provenance'");
  }
  const auto& prov = j["provenance"];
  if (!prov.contains("template_id") || !prov.contains("binding") ||
      !prov.contains("oracle_params")) {
    throw FormatError(
        "qa pair: provenance needs template_id, binding, oracle_params");
  }
  p.template_id = prov["template_id"].get<std::string>();
  p.binding = templates::binding_from_json(prov["binding"]);
  p.oracle_params.near_radius =
      prov["oracle_params"].value("near_radius", 100.0);
  p.oracle_params.tie_tolerance =
      prov["oracle_params"].value("tie_tolerance", 1e-9);
  p.paraphrased = j.value("paraphrased", false);
  return p;
}

inline void write_dataset(const std::vector<QaPair>& pairs, std::ostream& out) {
  for (const QaPair& p : pairs) {
    out << pair_to_json(p).dump() << '\n';
  }
}

inline std::vector<QaPair> read_dataset(std::istream& in) {
  std::vector<QaPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      pairs.push_back(pair_from_json(j));
    } catch (const FormatError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return pairs;
}

inline std::vector<QaPair> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset file: " + path);
  return read_dataset(in);
}

inline void save_dataset(const std::vector<QaPair>& pairs,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write dataset file: " + path);
  write_dataset(pairs, out);
}

// ---------------------------------------------------------------------------
// Splits

inline constexpr std::array<double, 3> default_split_ratios = {0.69, 0.17,
                                                               0.14};

struct CityLists {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// UrbanBIS city assignment: four cities train, Lihu validates, Yuehai tests.
inline CityLists default_city_lists() {
  return {{"Longhua", "Wuhu", "Qingdao", "Yingrenshi"}, {"Lihu"}, {"Yuehai"}};
}

struct SplitAssignment {
  enum class Mode { sentence_wise, city_wise };
  Mode mode = Mode::sentence_wise;
  nlohmann::ordered_json params;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

namespace detail_split {

inline std::vector<std::string> unique_sorted_qids(
    const std::vector<QaPair>& pairs) {
  std::vector<std::string> qids;
  qids.reserve(pairs.size());
  for (const QaPair& p : pairs) qids.push_back(p.qid);
  std::sort(qids.begin(), qids.end());
  qids.erase(std::unique(qids.begin(), qids.end()), qids.end());
  return qids;
}

}  // namespace detail_split

// Seeded shuffle then a contiguous cut: val and test get floor(ratio * n),
// the remainder goes to train.
inline SplitAssignment split_sentence_wise(
    const std::vector<QaPair>& pairs,
    std::array<double, 3> ratios = default_split_ratios,
    std::uint64_t seed = 0) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  std::vector<std::string> qids = detail_split::unique_sorted_qids(pairs);
  Rng rng(derive_seed(seed, "sentence_wise_split"));
  for (std::size_t i = qids.size(); i > 1; --i) {
    std::swap(qids[i - 1], qids[rng.bounded(i)]);
  }
  const auto n = qids.size();
  const auto n_val = static_cast<std::size_t>(
      std::floor(ratios[1] * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(
      std::floor(ratios[2] * static_cast<double>(n)));
  const auto n_train = n - n_val - n_test;
  SplitAssignment assignment;
  assignment.mode = SplitAssignment::Mode::sentence_wise;
  assignment.params = {{"ratios", ratios}, {"seed", seed}};
  assignment.train.assign(qids.begin(), qids.begin() + n_train);
  assignment.val.assign(qids.begin() + n_train, qids.begin() + n_train + n_val);
  assignment.test.assign(qids.begin() + n_train + n_val, qids.end());
  std::sort(assignment.train.begin(), assignment.train.end());
  std::sort(assignment.val.begin(), assignment.val.end());
  std::sort(assignment.test.begin(), assignment.test.end());
  return assignment;
}

inline SplitAssignment split_city_wise(const std::vector<QaPair>& pairs,
                                       const CityLists& lists =
                                           default_city_lists()) {
  std::map<std::string, int> membership;  // 0 train, 1 val, 2 test
  auto claim = [&](const std::vector<std::string>& cities, int set) {
    for (const std::string& city : cities) {
      auto [it, inserted] = membership.emplace(city, set);
      if (!inserted) {
        throw ConfigError("city '" + city +
                          "' appears in more than one split list");
      }
    }
  };
  claim(lists.train, 0);
  claim(lists.val, 1);
  claim(lists.test, 2);

  SplitAssignment assignment;
  assignment.mode = SplitAssignment::Mode::city_wise;
  assignment.params = {{"train_cities", lists.train},
                       {"val_cities", lists.val},
                       {"test_cities", lists.test}};
  std::set<std::string> seen;
  for (const QaPair& p : pairs) {
    if (!seen.insert(p.qid).second) continue;
    auto it = membership.find(p.city);
    if (it == membership.end()) {
      throw ConfigError("city '" + p.city + "' is not assigned to any split");
    }
    switch (it->second) {
      case 0: assignment.train.push_back(p.qid); break;
      case 1: assignment.val.push_back(p.qid); break;
      default: assignment.test.push_back(p.qid); break;
    }
  }
  std::sort(assignment.train.begin(), assignment.train.end());
  std::sort(assignment.val.begin(), assignment.val.end());
  std::sort(assignment.test.begin(), assignment.test.end());
  return assignment;
}

inline nlohmann::ordered_json split_to_json(const SplitAssignment& a) {
  nlohmann::ordered_json j;
  j["mode"] = a.mode == SplitAssignment::Mode::sentence_wise ? "sentence_wise"
                                                             : "city_wise";
  j["params"] = a.params;
  j["train"] = a.train;
  j["val"] = a.val;
  j["test"] = a.test;
  return j;
}

inline SplitAssignment split_from_json(const nlohmann::json& j) {
  SplitAssignment a;
  if (!j.contains("mode") || !j["mode"].is_string()) {
    throw FormatError("split manifest: missing string field 'mode'");
  }
  const std::string mode = j["mode"].get<std::string>();
  if (mode == "sentence_wise") {
    a.mode = SplitAssignment::Mode::sentence_wise;
  } else if (mode == "city_wise") {
    a.mode = SplitAssignment::Mode::city_wise;
  } else {
    throw FormatError("split manifest: unknown mode '" + mode + "'");
  }
  a.params = j.value("params", nlohmann::json::object());
  for (const char* f : {"train", "val", "test"}) {
    if (!j.contains(f) || !j[f].is_array()) {
      throw FormatError(std::string("split manifest: missing array field '") +
                        f + "'");
    }
  }
  a.train = j["train"].get<std::vector<std::string>>();
  a.val = j["val"].get<std::vector<std::string>>();
  a.test = j["test"].get<std::vector<std::string>>();
  return a;
}

inline SplitAssignment load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open split manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("split manifest: invalid JSON: ") + e.what());
  }
  return split_from_json(j);
}

}  // namespace city3dqa::dataset
