#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <string>
#include <thread>

#include <httplib.h>

#include "city3dqa/dataset.hpp"
#include "city3dqa/paraphrase.hpp"
#include "test_support.hpp"

using namespace city3dqa;

namespace {

// Local chat-completion stand-in whose reply content is scripted per test.
class MockEndpoint {
 public:
  explicit MockEndpoint(std::string reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   last_body_ = req.body;
                   nlohmann::json j = {
                       {"choices",
                        {{{"message",
                           {{"role", "assistant"}, {"content", reply_}}}}}}};
                   res.set_content(j.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) +
           "/v1/chat/completions";
  }

  std::string last_body() const { return last_body_; }

 private:
  std::string reply_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::string last_body_;
};

dataset::QaPair sample_pair(const SceneGraph& graph) {
  dataset::GenerateConfig config;
  config.synonym_probability = 0.0;
  dataset::GenerateResult result =
      dataset::generate_pairs(graph, templates::load_registry(), config);
  for (dataset::QaPair& p : result.pairs) {
    if (p.template_id == "II-02") return std::move(p);
  }
  REQUIRE(false);
  return {};
}

}  // namespace

TEST_CASE("default prompt carries the three slots") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  dataset::QaPair pair = sample_pair(bundle.graph);
  const templates::QuestionTemplate* t =
      templates::find_template(pair.template_id);
  REQUIRE(t != nullptr);
  const std::string prompt = llm::build_prompt(
      pair, *t, std::string(llm::default_prompt_template));
  CHECK(prompt.find(t->pattern) != std::string::npos);
  CHECK(prompt.find("The answer is: " + pair.answer.value) !=
        std::string::npos);
  CHECK(prompt.find("instance label = boat") != std::string::npos);
  // the prompt's own slots are gone; the pattern's bracketed slots remain
  CHECK(prompt.find("[template]") == std::string::npos);
  CHECK(prompt.find("[answer]") == std::string::npos);
  CHECK(prompt.find("[graph]") == std::string::npos);
}

TEST_CASE("paraphrase accepts a valid rewording") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  dataset::QaPair pair = sample_pair(bundle.graph);
  MockEndpoint mock("What is the total number of boat in this scene?");

  llm::LlmConfig config;
  config.endpoint = mock.endpoint();
  config.model = "test-model";
  config.timeout_seconds = 5;
  GraphIndex idx(bundle.graph);
  llm::ParaphraseOutcome outcome = llm::paraphrase_pair(pair, idx, config);
  CHECK_FALSE(outcome.degraded);
  CHECK(outcome.pair.paraphrased);
  CHECK(outcome.pair.question ==
        "What is the total number of boat in this scene?");
  CHECK(outcome.pair.answer == pair.answer);
  CHECK(outcome.pair.qid == pair.qid);
  CHECK(mock.last_body().find("test-model") != std::string::npos);
}

TEST_CASE("paraphrase accepts a synonym of the bound label") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  // bind the one reference-style template so the synonym lookup has an id
  dataset::GenerateConfig config_gen;
  config_gen.synonym_probability = 0.0;
  dataset::GenerateResult result = dataset::generate_pairs(
      bundle.graph, templates::load_registry(), config_gen);
  const dataset::QaPair* ref_pair = nullptr;
  for (const dataset::QaPair& p : result.pairs) {
    if (p.template_id == "UI-01") ref_pair = &p;
  }
  REQUIRE(ref_pair != nullptr);

  MockEndpoint mock("Tell me, what can the vessel be used for?");
  llm::LlmConfig config;
  config.endpoint = mock.endpoint();
  config.timeout_seconds = 5;
  GraphIndex idx(bundle.graph);
  llm::ParaphraseOutcome outcome = llm::paraphrase_pair(*ref_pair, idx, config);
  CHECK_FALSE(outcome.degraded);
  CHECK(outcome.pair.paraphrased);
}

TEST_CASE("paraphrase rejects a rewording that drops the entity") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  dataset::QaPair pair = sample_pair(bundle.graph);
  MockEndpoint mock("How many things are in this scene?");

  llm::LlmConfig config;
  config.endpoint = mock.endpoint();
  config.timeout_seconds = 5;
  GraphIndex idx(bundle.graph);
  llm::ParaphraseOutcome outcome = llm::paraphrase_pair(pair, idx, config);
  CHECK_FALSE(outcome.degraded);  // transport was fine, content was not
  CHECK_FALSE(outcome.pair.paraphrased);
  CHECK(outcome.pair.question == pair.question);
  CHECK_FALSE(outcome.note.empty());
}

TEST_CASE("unreachable endpoint degrades to the original pair") {
  testsupport::SceneBundle bundle = testsupport::boat_scene();
  dataset::QaPair pair = sample_pair(bundle.graph);
  llm::LlmConfig config;
  config.endpoint = "http://127.0.0.1:9/v1/chat/completions";  // nothing there
  config.timeout_seconds = 1;
  GraphIndex idx(bundle.graph);
  llm::ParaphraseOutcome outcome = llm::paraphrase_pair(pair, idx, config);
  CHECK(outcome.degraded);
  CHECK_FALSE(outcome.pair.paraphrased);
  CHECK(outcome.pair.question == pair.question);
  CHECK(outcome.pair.answer == pair.answer);
}

TEST_CASE("endpoint splitting keeps explicit paths") {
  auto [base, path] = llm::split_endpoint("http://host:8080/v2/custom");
  CHECK(base == "http://host:8080");
  CHECK(path == "/v2/custom");
  auto [base2, path2] = llm::split_endpoint("https://api.example.com");
  CHECK(base2 == "https://api.example.com");
  CHECK(path2 == "/v1/chat/completions");
}
