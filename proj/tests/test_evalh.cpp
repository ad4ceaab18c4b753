#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "city3dqa/evalh.hpp"
#include "test_support.hpp"

using namespace city3dqa;
using namespace city3dqa::evalh;
using dataset::QaPair;

namespace {

QaPair qa_fixture(std::string qid, std::string gold,
                 templates::Hops hops = templates::Hops::single,
                 templates::QuestionCategory category =
                     templates::QuestionCategory::instance_identification) {
  QaPair p;
  p.qid = std::move(qid);
  p.city = "Qingdao";
  p.scene_id = "s";
  p.category = category;
  p.hops = hops;
  p.question = "?";
  p.answer = {templates::AnswerKind::yes_no, std::move(gold)};
  p.template_id = "II-01";
  return p;
}

std::string random_text(Rng& rng) {
  static const char* words[] = {"the", "a",   "an",  "Three", "boat",
                                "Harbor", "  ", "SEVEN", "x9",   "tree"};
  std::string s;
  const std::size_t n = 1 + rng.bounded(6);
  for (std::size_t i = 0; i < n; ++i) {
    s += words[rng.bounded(std::size(words))];
    s += rng.coin(0.3) ? "  " : " ";
  }
  return s;
}

}  // namespace

TEST_CASE("normalize_answer worked examples") {
  CHECK(normalize_answer(" The Boat ") == "boat");
  CHECK(normalize_answer("Three") == "3");
  CHECK(normalize_answer("a an the   BOAT") == "boat");
  CHECK(normalize_answer("front-left") == "front-left");
  CHECK(normalize_answer("The residential building in the northwest area") ==
        "residential building in the northwest area");
  CHECK(normalize_answer("twenty") == "20");
  CHECK(normalize_answer("") == "");
  CHECK(normalize_answer("the") == "");
}

TEST_CASE("normalize_answer is idempotent on random strings") {
  Rng rng(81);
  for (int i = 0; i < 2000; ++i) {
    const std::string s = random_text(rng);
    const std::string once = normalize_answer(s);
    CHECK(normalize_answer(once) == once);
  }
}

TEST_CASE("load_predictions accepts ranked lists and rejects bad ones") {
  std::stringstream good(
      R"({"qid": "q1", "answers": ["yes"]})"
      "\n"
      R"({"qid": "q2", "answers": ["a", "b", "A  ", "c"]})"
      "\n");
  PredictionSet preds = load_predictions(good);
  REQUIRE(preds.ranked.count("q1"));
  CHECK(preds.ranked.at("q1") == std::vector<std::string>{"yes"});
  // "A  " collapses onto "a": best rank kept
  CHECK(preds.ranked.at("q2") == std::vector<std::string>{"a", "b", "c"});

  std::stringstream eleven(
      R"({"qid": "q", "answers": ["1","2","3","4","5","6","7","8","9","10","11"]})"
      "\n");
  CHECK_THROWS_AS(load_predictions(eleven), ParseError);

  std::stringstream empty_list(R"({"qid": "q", "answers": []})" "\n");
  CHECK_THROWS_AS(load_predictions(empty_list), ParseError);

  std::stringstream bad_schema(R"({"qid": "q"})" "\n");
  CHECK_THROWS_AS(load_predictions(bad_schema), ParseError);
}

TEST_CASE("prediction files round-trip preserving ranks") {
  PredictionSet preds;
  preds.ranked["q1"] = {"alpha", "beta", "gamma"};
  preds.ranked["q2"] = {"yes"};
  std::stringstream ss;
  write_predictions(preds, ss);
  PredictionSet back = load_predictions(ss);
  CHECK(back.ranked.at("q1") == preds.ranked.at("q1"));
  CHECK(back.ranked.at("q2") == preds.ranked.at("q2"));
}

TEST_CASE("accuracy_at_k worked examples and scan oracle") {
  CHECK(accuracy_at_k("yes", {"yes", "no"}, 1) == 1);
  CHECK(accuracy_at_k("yes", {"no", "maybe", "YES "}, 1) == 0);
  CHECK(accuracy_at_k("yes", {"no", "maybe", "YES "}, 10) == 1);

  Rng rng(82);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> ranked;
    const std::size_t n = 1 + rng.bounded(10);
    for (std::size_t r = 0; r < n; ++r) {
      ranked.push_back("answer-" + std::to_string(rng.bounded(12)));
    }
    const std::string gold = "answer-" + std::to_string(rng.bounded(12));
    for (std::size_t k : {std::size_t{1}, std::size_t{10}}) {
      int expected = 0;
      for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
        if (normalize_answer(ranked[r]) == normalize_answer(gold)) {
          expected = 1;
          break;
        }
      }
      CHECK(accuracy_at_k(gold, ranked, k) == expected);
    }
  }
}

TEST_CASE("evaluate: four-question fixture with hand-computed report") {
  using templates::Hops;
  using templates::QuestionCategory;
  std::vector<QaPair> pairs = {
      qa_fixture("q1", "yes", Hops::single,
                QuestionCategory::instance_identification),
      qa_fixture("q2", "no", Hops::single, QuestionCategory::usage_inquiry),
      qa_fixture("q3", "4", Hops::multi,
                QuestionCategory::spatial_comparison),
      qa_fixture("q4", "boat", Hops::multi,
                QuestionCategory::usage_comparison),
  };
  PredictionSet preds;
  preds.ranked["q1"] = {"yes", "no"};                       // gold at rank 1
  preds.ranked["q2"] = {"yes", "no"};                       // gold at rank 2
  preds.ranked["q3"] = {"0", "1", "2", "3", "5", "6", "7",  // gold absent
                        "8", "9", "10"};
  preds.ranked["q4"] = {" The  Boat "};  // normalization-only match

  EvalReport report = evaluate(pairs, preds);
  CHECK(report.overall.count == 4);
  CHECK_THAT(report.overall.acc1(), Catch::Matchers::WithinAbs(0.50, 1e-15));
  CHECK_THAT(report.overall.acc10(), Catch::Matchers::WithinAbs(0.75, 1e-15));
  CHECK(report.missing_predictions == 0);

  // strata recombine exactly
  for (const auto& strata :
       {std::vector<StratumStats>{report.by_hops.at(Hops::single),
                                  report.by_hops.at(Hops::multi)}}) {
    double weighted1 = 0.0, weighted10 = 0.0;
    std::uint64_t total = 0;
    for (const StratumStats& s : strata) {
      weighted1 += s.acc1() * static_cast<double>(s.count);
      weighted10 += s.acc10() * static_cast<double>(s.count);
      total += s.count;
    }
    CHECK(total == report.overall.count);
    CHECK_THAT(weighted1 / static_cast<double>(total),
               Catch::Matchers::WithinAbs(report.overall.acc1(), 1e-12));
    CHECK_THAT(weighted10 / static_cast<double>(total),
               Catch::Matchers::WithinAbs(report.overall.acc10(), 1e-12));
  }
}

TEST_CASE("evaluate: missing predictions score zero but keep their weight") {
  std::vector<QaPair> pairs = {qa_fixture("q1", "yes"),
                               qa_fixture("q2", "no")};
  EvalReport report = evaluate(pairs, PredictionSet{});
  CHECK(report.overall.count == 2);
  CHECK(report.overall.acc1() == 0.0);
  CHECK(report.overall.acc10() == 0.0);
  CHECK(report.missing_predictions == 2);
}

TEST_CASE("evaluate is permutation-invariant") {
  Rng rng(83);
  std::vector<QaPair> pairs;
  PredictionSet preds;
  for (int i = 0; i < 40; ++i) {
    QaPair p = qa_fixture("q" + std::to_string(i),
                         rng.coin(0.5) ? "yes" : "no",
                         rng.coin(0.5) ? templates::Hops::single
                                       : templates::Hops::multi);
    if (!rng.coin(0.2)) {
      preds.ranked[p.qid] = {rng.coin(0.5) ? "yes" : "no", "maybe"};
    }
    pairs.push_back(std::move(p));
  }
  EvalReport before = evaluate(pairs, preds);
  std::reverse(pairs.begin(), pairs.end());
  EvalReport after = evaluate(pairs, preds);
  CHECK(before.overall.hits1 == after.overall.hits1);
  CHECK(before.overall.hits10 == after.overall.hits10);
  CHECK(before.missing_predictions == after.missing_predictions);
}

TEST_CASE("evaluate warns about unknown qids and ignores them") {
  std::vector<QaPair> pairs = {qa_fixture("q1", "yes")};
  PredictionSet preds;
  preds.ranked["q1"] = {"yes"};
  preds.ranked["ghost"] = {"no"};
  int warnings = 0;
  EvalReport report =
      evaluate(pairs, preds, nullptr, [&](const std::string&) { ++warnings; });
  CHECK(warnings == 1);
  CHECK(report.overall.count == 1);
  CHECK(report.overall.acc1() == 1.0);
}

TEST_CASE("oracle_predictions achieve perfect accuracy on generated data") {
  Rng rng(84);
  testsupport::SceneBundle bundle = testsupport::random_scene(rng, 10, 4);
  dataset::GenerateResult result = dataset::generate_pairs(
      bundle.graph, templates::load_registry(), {});
  REQUIRE_FALSE(result.pairs.empty());
  PredictionSet preds =
      oracle_predictions(result.pairs, {&bundle.graph});
  EvalReport report = evaluate(result.pairs, preds);
  CHECK(report.overall.acc1() == 1.0);
  CHECK(report.overall.acc10() == 1.0);
  for (const auto& [hops, stats] : report.by_hops) {
    CHECK(stats.acc1() == 1.0);
  }
  for (const auto& [cat, stats] : report.by_category) {
    CHECK(stats.acc1() == 1.0);
  }

  SceneGraph other;
  other.city = "Elsewhere";
  other.scene_id = "x";
  try {
    oracle_predictions(result.pairs, {&other});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(bundle.graph.city) != std::string::npos);
  }
}

TEST_CASE("majority baseline ranks frequent train answers") {
  std::vector<QaPair> train;
  for (int i = 0; i < 5; ++i) {
    train.push_back(qa_fixture("t" + std::to_string(i), "yes"));
  }
  std::vector<QaPair> eval_pairs = {qa_fixture("e1", "yes"),
                                    qa_fixture("e2", "no")};
  PredictionSet preds = majority_baseline(train, eval_pairs);
  CHECK(preds.ranked.at("e1") == std::vector<std::string>{"yes"});
  CHECK(preds.ranked.at("e2") == std::vector<std::string>{"yes"});

  // tie between yes and no: "no" wins lexicographically
  train.resize(0);
  train.push_back(qa_fixture("t1", "yes"));
  train.push_back(qa_fixture("t2", "no"));
  preds = majority_baseline(train, eval_pairs);
  CHECK(preds.ranked.at("e1") == std::vector<std::string>{"no", "yes"});

  CHECK_THROWS_AS(majority_baseline({}, eval_pairs), ConfigError);
}

TEST_CASE("majority baseline acc@10 equals top-10 coverage of golds") {
  Rng rng(85);
  std::vector<QaPair> train, eval_pairs;
  for (int i = 0; i < 200; ++i) {
    train.push_back(qa_fixture("t" + std::to_string(i),
                              "answer-" + std::to_string(rng.bounded(15))));
  }
  for (int i = 0; i < 100; ++i) {
    eval_pairs.push_back(qa_fixture(
        "e" + std::to_string(i), "answer-" + std::to_string(rng.bounded(15))));
  }
  PredictionSet preds = majority_baseline(train, eval_pairs);
  EvalReport report = evaluate(eval_pairs, preds);

  const std::vector<std::string>& top = preds.ranked.at("e0");
  std::uint64_t covered = 0;
  for (const QaPair& p : eval_pairs) {
    for (const std::string& t : top) {
      if (normalize_answer(t) == normalize_answer(p.answer.value)) {
        ++covered;
        break;
      }
    }
  }
  CHECK(report.overall.hits10 == covered);
}

TEST_CASE("out-of-space golds are counted when a space is supplied") {
  std::vector<QaPair> pairs = {qa_fixture("q1", "yes"),
                               qa_fixture("q2", "surprise")};
  dataset::AnswerSpace space;
  space.entries = {{"yes", 3}, {"no", 1}};
  PredictionSet preds;
  preds.ranked["q1"] = {"yes"};
  preds.ranked["q2"] = {"surprise"};
  EvalReport report = evaluate(pairs, preds, &space);
  REQUIRE(report.out_of_space_golds.has_value());
  CHECK(*report.out_of_space_golds == 1);
}

TEST_CASE("report json includes all strata blocks") {
  std::vector<QaPair> pairs = {qa_fixture("q1", "yes")};
  PredictionSet preds;
  preds.ranked["q1"] = {"yes"};
  EvalReport report = evaluate(pairs, preds);
  nlohmann::ordered_json j =
      report_to_json(report, {{"dataset", "test.jsonl"}});
  CHECK(j.contains("overall"));
  CHECK(j.contains("by_hops"));
  CHECK(j.contains("by_category"));
  CHECK(j["overall"]["acc1"] == 1.0);
  CHECK(j["metadata"]["dataset"] == "test.jsonl");
}
