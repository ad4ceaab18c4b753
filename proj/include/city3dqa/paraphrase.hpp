#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "city3dqa/dataset.hpp"
#include "city3dqa/oracle.hpp"
#include "city3dqa/scene.hpp"
#include "city3dqa/templates.hpp"

namespace city3dqa::llm {

// Chat-completion prompt used to reword a template instance. The slots carry
// the raw pattern, the gold answer, and the filled graph values.
inline constexpr std::string_view default_prompt_template =
    "If you were the multimodal researcher, please generate the question "
    "based on the following template: [template]. \n The answer is: "
    "[answer].\n Here, the slots in template are [graph]. \n In this process, "
    "your generated question-answer pairs are in accordance with daily "
    "language habits.";

struct LlmConfig {
  std::string endpoint;  // e.g. https://host:port/v1/chat/completions
  std::string model;
  double temperature = 0.7;
  int timeout_seconds = 30;
  std::string api_key;  // from CITY3DQA_LLM_KEY
  std::string prompt_template = std::string(default_prompt_template);
};

struct ParaphraseOutcome {
  dataset::QaPair pair;
  bool degraded = false;   // transport failure; original kept
  std::string note;        // reason when not paraphrased
};

namespace detail {

inline std::string fold(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

inline bool contains_folded(const std::string& haystack,
                            std::string_view needle) {
  return haystack.find(fold(needle)) != std::string::npos;
}

inline std::string replace_all(std::string text, std::string_view token,
                               std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

// strips whitespace and one layer of surrounding quotes
inline std::string tidy_candidate(std::string s) {
  auto is_trim = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  while (!s.empty() && is_trim(s.front())) s.erase(s.begin());
  while (!s.empty() && is_trim(s.back())) s.pop_back();
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace detail

inline std::string render_binding(const templates::Binding& binding) {
  std::string out;
  for (const templates::BoundSlot& s : binding.slots) {
    std::string_view token = templates::slot_token(s.slot);
    token.remove_prefix(1);
    token.remove_suffix(1);
    if (!out.empty()) out += "; ";
    out += std::string(token) + " = " + s.surface;
  }
  return out;
}

inline std::string build_prompt(const dataset::QaPair& pair,
                                const templates::QuestionTemplate& t,
                                const std::string& prompt_template) {
  std::string prompt = prompt_template;
  prompt = detail::replace_all(prompt, "[template]", t.pattern);
  prompt = detail::replace_all(prompt, "[answer]", pair.answer.value);
  prompt = detail::replace_all(prompt, "[graph]", render_binding(pair.binding));
  return prompt;
}

// A rewording is accepted only if every bound surface form (or one of the
// bound instance's synonyms) survives and the stored gold answer still equals
// the oracle's re-answer of the pair's provenance.
inline bool paraphrase_acceptable(const std::string& candidate,
                                  const dataset::QaPair& pair,
                                  const GraphIndex& idx, std::string* why) {
  if (candidate.empty()) {
    if (why) *why = "empty response";
    return false;
  }
  const std::string folded = detail::fold(candidate);
  for (const templates::BoundSlot& s : pair.binding.slots) {
    if (detail::contains_folded(folded, s.surface)) continue;
    bool synonym_ok = false;
    if (s.instance_id) {
      for (const std::string& syn : idx.synonyms(*s.instance_id)) {
        if (detail::contains_folded(folded, syn)) {
          synonym_ok = true;
          break;
        }
      }
    }
    if (!synonym_ok) {
      if (why) *why = "bound entity '" + s.surface + "' missing from rewording";
      return false;
    }
  }
  oracle::Answer again =
      oracle::answer(idx, pair.template_id, pair.binding, pair.oracle_params);
  if (again != pair.answer) {
    if (why) *why = "gold answer changed under re-answering";
    return false;
  }
  return true;
}

// Splits "scheme://host[:port]/path" for httplib.
inline std::pair<std::string, std::string> split_endpoint(
    const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  std::size_t path_start = std::string::npos;
  if (scheme_end != std::string::npos) {
    path_start = endpoint.find('/', scheme_end + 3);
  } else {
    path_start = endpoint.find('/');
  }
  if (path_start == std::string::npos) {
    return {endpoint, "/v1/chat/completions"};
  }
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

// Never blocks generation: any transport or validation problem returns the
// original pair, with `degraded` set for transport-level failures.
inline ParaphraseOutcome paraphrase_pair(const dataset::QaPair& pair,
                                         const GraphIndex& idx,
                                         const LlmConfig& config) {
  ParaphraseOutcome outcome{pair, false, {}};
  const templates::QuestionTemplate* t =
      templates::find_template(pair.template_id);
  if (!t) {
    outcome.note = "unknown template id " + pair.template_id;
    return outcome;
  }
  const auto [base, path] = split_endpoint(config.endpoint);
  httplib::Client client(base);
  client.set_connection_timeout(config.timeout_seconds, 0);
  client.set_read_timeout(config.timeout_seconds, 0);
  client.set_write_timeout(config.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }
  nlohmann::json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"},
        {"content", build_prompt(pair, *t, config.prompt_template)}}});

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res || res->status != 200) {
    outcome.degraded = true;
    outcome.note = !res ? "endpoint unreachable"
                        : "endpoint returned status " +
                              std::to_string(res->status);
    return outcome;
  }
  std::string candidate;
  try {
    nlohmann::json j = nlohmann::json::parse(res->body);
    candidate = detail::tidy_candidate(
        j.at("choices").at(0).at("message").at("content").get<std::string>());
  } catch (const nlohmann::json::exception&) {
    outcome.degraded = true;
    outcome.note = "malformed completion response";
    return outcome;
  }
  std::string why;
  if (!paraphrase_acceptable(candidate, pair, idx, &why)) {
    outcome.note = why;
    return outcome;
  }
  outcome.pair.question = candidate;
  outcome.pair.paraphrased = true;
  return outcome;
}

}  // namespace city3dqa::llm
