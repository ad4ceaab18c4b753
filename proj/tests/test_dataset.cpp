#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "city3dqa/dataset.hpp"
#include "city3dqa/evalh.hpp"
#include "test_support.hpp"

using namespace city3dqa;
using namespace city3dqa::dataset;

namespace {

std::string serialize(const std::vector<QaPair>& pairs) {
  std::stringstream ss;
  write_dataset(pairs, ss);
  return ss.str();
}

std::vector<QaPair> synthetic_pairs(std::size_t n,
                                    const std::vector<std::string>& cities) {
  std::vector<QaPair> pairs;
  pairs.reserve(n);
  Rng rng(1234);
  for (std::size_t i = 0; i < n; ++i) {
    QaPair p;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016zx", i);
    p.qid = hex;
    p.city = cities[i % cities.size()];
    p.scene_id = "s" + std::to_string(i % 7);
    p.category = templates::QuestionCategory::relationship;
    p.hops = rng.coin(0.5) ? templates::Hops::single : templates::Hops::multi;
    p.question = "Is there any boat?";
    p.answer = {templates::AnswerKind::yes_no, rng.coin(0.5) ? "yes" : "no"};
    p.template_id = "II-01";
    p.binding.slots.push_back(
        {templates::SlotKind::instance_label, "boat", "boat", std::nullopt});
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace

TEST_CASE("generate_pairs on an empty graph") {
  SceneGraph g;
  g.city = "Qingdao";
  g.scene_id = "void";
  GenerateResult result = generate_pairs(g, templates::load_registry(), {});
  CHECK(result.pairs.empty());
}

TEST_CASE("single-boat scene produces the counting pair") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  GenerateConfig config;
  config.synonym_probability = 0.0;
  GenerateResult result =
      generate_pairs(bundle.graph, templates::load_registry(), config);
  bool found = false;
  for (const QaPair& p : result.pairs) {
    if (p.question == "How many boat are in this scene?" &&
        p.answer.value == "1") {
      found = true;
    }
    CHECK(p.city == "Qingdao");
    CHECK_FALSE(p.qid.empty());
  }
  CHECK(found);
}

TEST_CASE("generation is deterministic and worker-count independent") {
  Rng rng(71);
  std::vector<testsupport::SceneBundle> bundles;
  for (int i = 0; i < 4; ++i) {
    bundles.push_back(testsupport::random_scene(
        rng, 10, 4, i % 2 ? "Wuhu" : "Qingdao", "scene-" + std::to_string(i)));
  }
  std::vector<const SceneGraph*> graphs;
  for (const auto& b : bundles) graphs.push_back(&b.graph);

  GenerateConfig config;
  config.seed = 5;
  const std::string once =
      serialize(generate_dataset(graphs, templates::load_registry(), config, 1)
                    .pairs);
  const std::string again =
      serialize(generate_dataset(graphs, templates::load_registry(), config, 1)
                    .pairs);
  const std::string parallel =
      serialize(generate_dataset(graphs, templates::load_registry(), config, 8)
                    .pairs);
  CHECK(once == again);
  CHECK(once == parallel);

  GenerateConfig other = config;
  other.seed = 6;
  CHECK(serialize(generate_dataset(graphs, templates::load_registry(), other, 1)
                      .pairs) != once);
}

TEST_CASE("qids are stable content hashes") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  GenerateResult result =
      generate_pairs(bundle.graph, templates::load_registry(), {});
  for (const QaPair& p : result.pairs) {
    CHECK(p.qid ==
          compute_qid(p.city, p.scene_id, p.template_id, p.binding));
    CHECK(p.qid.size() == 16);
  }
}

TEST_CASE("gold answers round-trip through provenance") {
  Rng rng(72);
  for (int trial = 0; trial < 10; ++trial) {
    testsupport::SceneBundle bundle = testsupport::random_scene(rng);
    GenerateConfig config;
    config.seed = static_cast<std::uint64_t>(trial);
    GenerateResult result =
        generate_pairs(bundle.graph, templates::load_registry(), config);
    GraphIndex idx(bundle.graph);
    for (const QaPair& p : result.pairs) {
      oracle::Answer again =
          oracle::answer(idx, p.template_id, p.binding, p.oracle_params);
      CHECK(again == p.answer);
    }
  }
}

TEST_CASE("hop labels match the registry") {
  Rng rng(73);
  testsupport::SceneBundle bundle = testsupport::random_scene(rng);
  GenerateResult result =
      generate_pairs(bundle.graph, templates::load_registry(), {});
  for (const QaPair& p : result.pairs) {
    const templates::QuestionTemplate* t =
        templates::find_template(p.template_id);
    REQUIRE(t != nullptr);
    CHECK(p.hops == t->hops);
    CHECK(p.category == t->category);
  }
}

TEST_CASE("dedup_pairs keeps first occurrences") {
  std::vector<QaPair> pairs = synthetic_pairs(6, {"Qingdao"});
  pairs[3] = pairs[0];  // exact duplicate
  std::vector<QaPair> unique = dedup_pairs(pairs);
  CHECK(unique.size() == 5);

  std::set<std::string> keys;
  for (const QaPair& p : unique) {
    keys.insert(p.question + "\x1f" + p.answer.value + "\x1f" + p.city +
                "\x1f" + p.scene_id);
  }
  CHECK(keys.size() == unique.size());
}

TEST_CASE("answer space orders by frequency then lexicographically") {
  std::vector<QaPair> pairs = synthetic_pairs(3, {"Qingdao"});
  pairs[0].answer.value = "Yes";
  pairs[1].answer.value = "no";
  pairs[2].answer.value = "yes";
  AnswerSpace space = build_answer_space(pairs);
  REQUIRE(space.entries.size() == 2);
  CHECK(space.entries[0] ==
        std::pair<std::string, std::uint64_t>{"yes", 2});
  CHECK(space.entries[1] == std::pair<std::string, std::uint64_t>{"no", 1});
  std::uint64_t total = 0;
  for (const auto& [value, count] : space.entries) total += count;
  CHECK(total == pairs.size());
  CHECK(build_answer_space({}).entries.empty());
}

TEST_CASE("dataset io round-trips and is byte-stable") {
  Rng rng(74);
  testsupport::SceneBundle bundle = testsupport::random_scene(rng, 12, 4);
  GenerateResult result =
      generate_pairs(bundle.graph, templates::load_registry(), {});
  REQUIRE_FALSE(result.pairs.empty());

  const std::string bytes = serialize(result.pairs);
  CHECK(serialize(result.pairs) == bytes);

  std::stringstream ss(bytes);
  std::vector<QaPair> back = read_dataset(ss);
  REQUIRE(back.size() == result.pairs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].qid == result.pairs[i].qid);
    CHECK(back[i].question == result.pairs[i].question);
    CHECK(back[i].answer == result.pairs[i].answer);
    CHECK(back[i].binding.canonical_key() ==
          result.pairs[i].binding.canonical_key());
  }
  CHECK(serialize(back) == bytes);
}

TEST_CASE("dataset reader reports the offending line") {
  std::stringstream ss("{\"qid\": \"x\"}\n");
  try {
    read_dataset(ss);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
  }
  std::stringstream garbage("not json\n");
  CHECK_THROWS_AS(read_dataset(garbage), ParseError);
}

TEST_CASE("sentence-wise split: sizes, determinism, partition") {
  std::vector<QaPair> pairs =
      synthetic_pairs(100, {"Qingdao", "Wuhu", "Lihu"});
  SplitAssignment split = split_sentence_wise(pairs, {0.69, 0.17, 0.14}, 3);
  CHECK(split.train.size() == 69);
  CHECK(split.val.size() == 17);
  CHECK(split.test.size() == 14);

  SplitAssignment again = split_sentence_wise(pairs, {0.69, 0.17, 0.14}, 3);
  CHECK(split.train == again.train);
  CHECK(split.val == again.val);
  CHECK(split.test == again.test);

  std::set<std::string> all;
  for (const auto& part : {split.train, split.val, split.test}) {
    for (const std::string& qid : part) CHECK(all.insert(qid).second);
  }
  CHECK(all.size() == pairs.size());

  CHECK_THROWS_AS(split_sentence_wise(pairs, {0.5, 0.4, 0.2}, 0), ConfigError);
  CHECK_THROWS_AS(split_sentence_wise(pairs, {1.0, 0.0, 0.0}, 0), ConfigError);
}

TEST_CASE("city-wise split follows the city lists") {
  std::vector<QaPair> pairs = synthetic_pairs(
      600, {"Qingdao", "Wuhu", "Longhua", "Yuehai", "Lihu", "Yingrenshi"});
  SplitAssignment split = split_city_wise(pairs);
  std::map<std::string, const QaPair*> by_qid;
  for (const QaPair& p : pairs) by_qid[p.qid] = &p;
  for (const std::string& qid : split.val) {
    CHECK(by_qid.at(qid)->city == "Lihu");
  }
  for (const std::string& qid : split.test) {
    CHECK(by_qid.at(qid)->city == "Yuehai");
  }
  std::set<std::string> train_cities;
  for (const std::string& qid : split.train) {
    train_cities.insert(by_qid.at(qid)->city);
  }
  CHECK(train_cities ==
        std::set<std::string>{"Longhua", "Wuhu", "Qingdao", "Yingrenshi"});
  CHECK(split.train.size() + split.val.size() + split.test.size() ==
        pairs.size());

  std::vector<QaPair> stray = synthetic_pairs(10, {"Atlantis"});
  try {
    split_city_wise(stray);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("Atlantis") != std::string::npos);
  }
}

TEST_CASE("split manifest json round-trip") {
  std::vector<QaPair> pairs = synthetic_pairs(50, {"Qingdao", "Lihu",
                                                   "Yuehai"});
  SplitAssignment split = split_sentence_wise(pairs, default_split_ratios, 9);
  nlohmann::json j = split_to_json(split);
  SplitAssignment back = split_from_json(j);
  CHECK(back.mode == split.mode);
  CHECK(back.train == split.train);
  CHECK(back.val == split.val);
  CHECK(back.test == split.test);
}
