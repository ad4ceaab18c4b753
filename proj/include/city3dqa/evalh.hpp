#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "city3dqa/dataset.hpp"
#include "city3dqa/errors.hpp"
#include "city3dqa/normalize.hpp"
#include "city3dqa/oracle.hpp"
#include "city3dqa/scene.hpp"

namespace city3dqa::evalh {

using dataset::AnswerSpace;
using dataset::QaPair;
using templates::Hops;
using templates::QuestionCategory;

inline constexpr std::size_t max_ranked_answers = 10;

using WarnFn = std::function<void(const std::string&)>;

// qid -> ranked answers (at most 10, no duplicates after normalization).
struct PredictionSet {
  std::unordered_map<std::string, std::vector<std::string>> ranked;
};

inline std::vector<std::string> dedup_ranked(
    const std::vector<std::string>& answers) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const std::string& a : answers) {
    if (seen.insert(normalize_answer(a)).second) out.push_back(a);
  }
  return out;
}

inline PredictionSet load_predictions(std::istream& in,
                                      const WarnFn& warn = nullptr) {
  PredictionSet preds;
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
    if (!j.contains("qid") || !j["qid"].is_string() ||
        !j.contains("answers") || !j["answers"].is_array()) {
      throw ParseError(line_no, "expected {qid, answers[...]}");
    }
    if (j["answers"].empty()) {
      throw ParseError(line_no, "empty answer list");
    }
    if (j["answers"].size() > max_ranked_answers) {
      throw ParseError(line_no, "more than 10 ranked answers");
    }
    std::vector<std::string> answers;
    for (const auto& ja : j["answers"]) {
      if (!ja.is_string()) throw ParseError(line_no, "non-string answer");
      answers.push_back(ja.get<std::string>());
    }
    const std::string qid = j["qid"].get<std::string>();
    auto [it, inserted] = preds.ranked.emplace(qid, dedup_ranked(answers));
    if (!inserted && warn) {
      warn("duplicate prediction for qid " + qid + " at line " +
           std::to_string(line_no) + "; keeping the first");
    }
  }
  return preds;
}

inline PredictionSet load_predictions_file(const std::string& path,
                                           const WarnFn& warn = nullptr) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open prediction file: " + path);
  return load_predictions(in, warn);
}

inline void write_predictions(const PredictionSet& preds, std::ostream& out) {
  std::vector<const std::string*> qids;
  qids.reserve(preds.ranked.size());
  for (const auto& [qid, answers] : preds.ranked) qids.push_back(&qid);
  std::sort(qids.begin(), qids.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const std::string* qid : qids) {
    nlohmann::ordered_json j;
    j["qid"] = *qid;
    j["answers"] = preds.ranked.at(*qid);
    out << j.dump() << '\n';
  }
}

// 1 iff the normalized gold appears among the first k normalized answers.
inline int accuracy_at_k(const std::string& gold,
                         const std::vector<std::string>& ranked,
                         std::size_t k) {
  const std::string g = normalize_answer(gold);
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (normalize_answer(ranked[i]) == g) return 1;
  }
  return 0;
}

struct StratumStats {
  std::uint64_t count = 0;
  std::uint64_t hits1 = 0;
  std::uint64_t hits10 = 0;

  double acc1() const {
    return count == 0 ? 0.0
                      : static_cast<double>(hits1) / static_cast<double>(count);
  }
  double acc10() const {
    return count == 0 ? 0.0 : static_cast<double>(hits10) /
                                  static_cast<double>(count);
  }
};

struct EvalReport {
  StratumStats overall;
  std::map<Hops, StratumStats> by_hops;
  std::map<QuestionCategory, StratumStats> by_category;
  std::uint64_t missing_predictions = 0;
  std::optional<std::uint64_t> out_of_space_golds;
};

// Questions without a prediction score 0 at both cutoffs and stay in the
// denominator; predictions for unknown qids are warned about and ignored.
inline EvalReport evaluate(const std::vector<QaPair>& pairs,
                           const PredictionSet& preds,
                           const AnswerSpace* space = nullptr,
                           const WarnFn& warn = nullptr) {
  EvalReport report;
  if (space) report.out_of_space_golds = 0;
  std::set<std::string> dataset_qids;
  for (const QaPair& p : pairs) dataset_qids.insert(p.qid);
  if (warn) {
    for (const auto& [qid, answers] : preds.ranked) {
      if (!dataset_qids.count(qid)) {
        warn("prediction for unknown qid " + qid + " ignored");
      }
    }
  }
  for (const QaPair& p : pairs) {
    int hit1 = 0, hit10 = 0;
    auto it = preds.ranked.find(p.qid);
    if (it == preds.ranked.end()) {
      ++report.missing_predictions;
    } else {
      hit1 = accuracy_at_k(p.answer.value, it->second, 1);
      hit10 = accuracy_at_k(p.answer.value, it->second, max_ranked_answers);
    }
    for (StratumStats* s : {&report.overall, &report.by_hops[p.hops],
                            &report.by_category[p.category]}) {
      s->count += 1;
      s->hits1 += static_cast<std::uint64_t>(hit1);
      s->hits10 += static_cast<std::uint64_t>(hit10);
    }
    if (space && !space->contains(normalize_answer(p.answer.value))) {
      ++*report.out_of_space_golds;
    }
  }
  return report;
}

// Upper-bound baseline: rank 1 is the oracle's re-answer of each pair's
// provenance. Every referenced scene graph must be supplied.
inline PredictionSet oracle_predictions(
    const std::vector<QaPair>& pairs,
    const std::vector<const SceneGraph*>& graphs,
    const std::vector<templates::QuestionTemplate>* registry = nullptr) {
  std::map<std::string, const SceneGraph*> by_key;
  for (const SceneGraph* g : graphs) {
    by_key[g->city + "/" + g->scene_id] = g;
  }
  std::set<std::string> missing;
  for (const QaPair& p : pairs) {
    if (!by_key.count(p.city + "/" + p.scene_id)) {
      missing.insert(p.city + "/" + p.scene_id);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing scene graphs for:";
    for (const std::string& key : missing) msg += " " + key;
    throw ConfigError(msg);
  }
  std::map<std::string, GraphIndex> indexes;
  for (const auto& [key, g] : by_key) indexes.emplace(key, GraphIndex(*g));
  PredictionSet preds;
  for (const QaPair& p : pairs) {
    const GraphIndex& idx = indexes.at(p.city + "/" + p.scene_id);
    oracle::Answer a = oracle::answer(idx, p.template_id, p.binding,
                                      p.oracle_params, registry);
    preds.ranked[p.qid] = {a.value};
  }
  return preds;
}

// Floor baseline: the ten most frequent normalized train answers, ties
// broken lexicographically, served for every evaluation question.
inline PredictionSet majority_baseline(const std::vector<QaPair>& train_pairs,
                                       const std::vector<QaPair>& eval_pairs) {
  if (train_pairs.empty()) {
    throw ConfigError("majority baseline needs a non-empty training set");
  }
  std::map<std::string, std::uint64_t> counts;
  for (const QaPair& p : train_pairs) {
    ++counts[normalize_answer(p.answer.value)];
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(),
                                                            counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> top;
  for (std::size_t i = 0; i < std::min(ranked.size(), max_ranked_answers);
       ++i) {
    top.push_back(ranked[i].first);
  }
  PredictionSet preds;
  for (const QaPair& p : eval_pairs) preds.ranked[p.qid] = top;
  return preds;
}

inline nlohmann::ordered_json stratum_to_json(const StratumStats& s) {
  return {{"count", s.count}, {"acc1", s.acc1()}, {"acc10", s.acc10()}};
}

inline nlohmann::ordered_json report_to_json(
    const EvalReport& report,
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object()) {
  nlohmann::ordered_json j;
  j["overall"] = stratum_to_json(report.overall);
  j["missing_predictions"] = report.missing_predictions;
  j["by_hops"] = nlohmann::ordered_json::object();
  for (const auto& [hops, stats] : report.by_hops) {
    j["by_hops"][std::string(templates::to_string(hops))] =
        stratum_to_json(stats);
  }
  j["by_category"] = nlohmann::ordered_json::object();
  for (const auto& [cat, stats] : report.by_category) {
    j["by_category"][std::string(templates::to_string(cat))] =
        stratum_to_json(stats);
  }
  if (report.out_of_space_golds) {
    j["out_of_space_golds"] = *report.out_of_space_golds;
  }
  j["metadata"] = std::move(metadata);
  return j;
}

}  // namespace city3dqa::evalh
