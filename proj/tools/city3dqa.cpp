// city3dqa: scene graphs, grounded QA generation, and evaluation for
// instance-segmented city point clouds.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "city3dqa/dataset.hpp"
#include "city3dqa/evalh.hpp"
#include "city3dqa/ingest.hpp"
#include "city3dqa/lexicon.hpp"
#include "city3dqa/oracle.hpp"
#include "city3dqa/paraphrase.hpp"
#include "city3dqa/scene.hpp"
#include "city3dqa/semantics.hpp"
#include "city3dqa/templates.hpp"

namespace c3 = city3dqa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDegraded = 3;

nlohmann::json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw c3::FormatError(std::string("cannot open ") + what + ": " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw c3::FormatError(std::string(what) + ": invalid JSON: " + e.what());
  }
  return j;
}

c3::ingest::ClassMap load_class_map(const std::string& path) {
  nlohmann::json j = load_json_file(path, "class map");
  if (!j.is_object()) throw c3::FormatError("class map: expected JSON object");
  c3::ingest::ClassMap map;
  for (auto it = j.begin(); it != j.end(); ++it) {
    map[static_cast<std::uint32_t>(std::stoul(it.key()))] =
        it.value().get<std::string>();
  }
  return map;
}

c3::ingest::CategoryOverrides load_overrides(const std::string& path) {
  nlohmann::json j = load_json_file(path, "category overrides");
  if (!j.is_object()) {
    throw c3::FormatError("category overrides: expected JSON object");
  }
  c3::ingest::CategoryOverrides map;
  for (auto it = j.begin(); it != j.end(); ++it) {
    map[static_cast<std::uint32_t>(std::stoul(it.key()))] =
        it.value().get<std::string>();
  }
  return map;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw c3::FormatError("cannot write output file: " + path);
  out << text;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::uint64_t h = c3::fnv1a64(ss.str());
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

std::vector<c3::SceneGraph> load_graphs(const std::vector<std::string>& paths) {
  std::vector<c3::SceneGraph> graphs;
  graphs.reserve(paths.size());
  for (const std::string& p : paths) {
    graphs.push_back(c3::load_scene_graph(p));
  }
  return graphs;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
  std::string input;
  std::string format = "auto";
  std::string class_map_path;
  std::string lexicon_path;
  std::string overrides_path;
  std::string city;
  std::string scene_id;
  std::string out;
};

int run_ingest(const IngestArgs& args) {
  std::ifstream in(args.input, std::ios::binary);
  if (!in) throw c3::FormatError("cannot open input: " + args.input);

  c3::ingest::PointFormat format;
  if (args.format == "xyzci") {
    format = c3::ingest::PointFormat::xyzci;
  } else if (args.format == "c3pc") {
    format = c3::ingest::PointFormat::c3pc;
  } else {
    format = c3::ingest::detect_point_format(in);
  }

  c3::ingest::SceneStats stats;
  if (format == c3::ingest::PointFormat::c3pc) {
    c3::ingest::C3pcReader reader(in);
    stats = c3::ingest::stream_scene_stats(reader);
  } else {
    c3::ingest::XyzciReader reader(in);
    stats = c3::ingest::stream_scene_stats(reader);
  }

  c3::ingest::ClassMap class_map = load_class_map(args.class_map_path);
  std::optional<c3::Lexicon> lexicon;
  if (!args.lexicon_path.empty()) lexicon = c3::load_lexicon(args.lexicon_path);
  std::optional<c3::ingest::CategoryOverrides> overrides;
  if (!args.overrides_path.empty()) {
    overrides = load_overrides(args.overrides_path);
  }

  c3::ingest::SceneManifest manifest;
  manifest.city = args.city;
  manifest.scene_id = args.scene_id;
  manifest.class_map = class_map;
  manifest.instances = c3::ingest::finalize_instances(
      stats, class_map, lexicon ? &*lexicon : nullptr,
      overrides ? &*overrides : nullptr);

  std::ostringstream ss;
  c3::ingest::write_manifest(manifest, ss);
  write_text(args.out, ss.str());
  std::cerr << "ingest: " << manifest.instances.size() << " instances\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// graph

struct GraphArgs {
  std::string manifest_path;
  std::string lexicon_path;
  std::string regions_path;
  std::string edge_policy = "all_pairs";
  std::uint32_t k = 4;
  double front_bearing = c3::semantics::default_front_bearing_deg;
  std::string out;
};

int run_graph(const GraphArgs& args) {
  c3::ingest::SceneManifest manifest = c3::ingest::load_manifest(args.manifest_path);
  c3::Lexicon lexicon = c3::load_lexicon(args.lexicon_path);
  c3::RegionMap regions = c3::load_region_map(args.regions_path);

  c3::semantics::SemanticsConfig config;
  config.front_bearing_deg = args.front_bearing;
  config.policy = args.edge_policy == "k_nearest"
                      ? c3::semantics::EdgePolicy::k_nearest(args.k)
                      : c3::semantics::EdgePolicy::all_pairs();

  c3::semantics::SceneGraphBuild build =
      c3::semantics::build_scene_graph(manifest, lexicon, regions, config);
  c3::ValidationReport report = c3::validate_scene_graph(build.graph);
  if (!report.ok()) {
    for (const c3::Violation& v : report.violations) {
      std::cerr << "graph: invariant violation: " << v.message << "\n";
    }
    return kExitData;
  }
  for (const auto& skipped : build.skipped_pairs) {
    std::cerr << "graph: skipped pair " << skipped.head << "->" << skipped.tail
              << ": " << skipped.reason << "\n";
  }
  std::ostringstream ss;
  c3::write_scene_graph(build.graph, ss);
  write_text(args.out, ss.str());
  std::cerr << "graph: " << build.graph.instances.size() << " instances, "
            << build.graph.spatial_edges.size() << " spatial edges, "
            << build.graph.semantic_triples.size() << " semantic triples\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::vector<std::string> graph_paths;
  std::uint64_t seed = 0;
  std::optional<std::size_t> per_template_limit;
  double synonym_probability = 0.3;
  double near_radius = 100.0;
  unsigned jobs = 1;
  std::string templates_path;
  bool paraphrase = false;
  std::string llm_endpoint;
  std::string llm_model = "gpt-3.5-turbo";
  double llm_temperature = 0.7;
  int llm_timeout = 30;
  bool verbose = false;
  std::string out;
};

int run_generate(const GenerateArgs& args) {
  std::vector<c3::SceneGraph> graphs = load_graphs(args.graph_paths);
  std::vector<const c3::SceneGraph*> graph_ptrs;
  for (const c3::SceneGraph& g : graphs) graph_ptrs.push_back(&g);

  std::vector<c3::templates::QuestionTemplate> registry =
      c3::templates::load_registry();
  if (!args.templates_path.empty()) {
    registry = c3::templates::merge_registry(
        c3::templates::load_templates_file(args.templates_path));
  }
  if (args.verbose) {
    std::cerr << "generate: " << c3::templates::registry_discrepancy_note()
              << "\n";
  }

  c3::dataset::GenerateConfig config;
  config.seed = args.seed;
  config.per_template_limit = args.per_template_limit;
  config.synonym_probability = args.synonym_probability;
  config.oracle.near_radius = args.near_radius;

  c3::dataset::GenerateResult result =
      c3::dataset::generate_dataset(graph_ptrs, registry, config, args.jobs);
  result.pairs = c3::dataset::dedup_pairs(std::move(result.pairs));
  for (const std::string& reason : result.skipped) {
    std::cerr << "generate: skipped binding: " << reason << "\n";
  }

  bool degraded = false;
  if (args.paraphrase) {
    c3::llm::LlmConfig llm;
    llm.endpoint = args.llm_endpoint;
    llm.model = args.llm_model;
    llm.temperature = args.llm_temperature;
    llm.timeout_seconds = args.llm_timeout;
    if (const char* key = std::getenv("CITY3DQA_LLM_KEY")) llm.api_key = key;

    std::map<std::string, c3::GraphIndex> indexes;
    for (const c3::SceneGraph& g : graphs) {
      indexes.emplace(g.city + "/" + g.scene_id, c3::GraphIndex(g));
    }
    std::vector<c3::llm::ParaphraseOutcome> outcomes(result.pairs.size());
    c3::detail::parallel_for_indexed(
        result.pairs.size(), args.jobs, [&](std::size_t i) {
          const c3::dataset::QaPair& p = result.pairs[i];
          outcomes[i] = c3::llm::paraphrase_pair(
              p, indexes.at(p.city + "/" + p.scene_id), llm);
        });
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (outcomes[i].degraded) {
        degraded = true;
        std::cerr << "generate: paraphrase degraded for "
                  << result.pairs[i].qid << ": " << outcomes[i].note << "\n";
      } else if (!outcomes[i].note.empty() && args.verbose) {
        std::cerr << "generate: paraphrase rejected for "
                  << result.pairs[i].qid << ": " << outcomes[i].note << "\n";
      }
      result.pairs[i] = std::move(outcomes[i].pair);
    }
  }

  std::ostringstream ss;
  c3::dataset::write_dataset(result.pairs, ss);
  write_text(args.out, ss.str());
  std::cerr << "generate: " << result.pairs.size() << " qa pairs ("
            << result.skipped.size() << " bindings skipped)\n";
  return degraded ? kExitDegraded : kExitOk;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string dataset_path;
  std::string mode = "sentence_wise";
  std::vector<double> ratios{0.69, 0.17, 0.14};
  std::uint64_t seed = 0;
  std::vector<std::string> train_cities;
  std::vector<std::string> val_cities;
  std::vector<std::string> test_cities;
  std::string out;
};

int run_split(const SplitArgs& args) {
  std::vector<c3::dataset::QaPair> pairs =
      c3::dataset::load_dataset(args.dataset_path);
  c3::dataset::SplitAssignment assignment;
  if (args.mode == "sentence_wise") {
    if (args.ratios.size() != 3) {
      throw c3::ConfigError("--ratios needs exactly three values");
    }
    assignment = c3::dataset::split_sentence_wise(
        pairs, {args.ratios[0], args.ratios[1], args.ratios[2]}, args.seed);
  } else if (args.mode == "city_wise") {
    c3::dataset::CityLists lists = c3::dataset::default_city_lists();
    if (!args.train_cities.empty() || !args.val_cities.empty() ||
        !args.test_cities.empty()) {
      lists = {args.train_cities, args.val_cities, args.test_cities};
    }
    assignment = c3::dataset::split_city_wise(pairs, lists);
  } else {
    throw c3::ConfigError("unknown split mode '" + args.mode + "'");
  }
  write_text(args.out, c3::dataset::split_to_json(assignment).dump(2) + "\n");
  std::cerr << "split: train " << assignment.train.size() << ", val "
            << assignment.val.size() << ", test " << assignment.test.size()
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string dataset_path;
  std::string predictions_path;
  bool oracle = false;
  std::vector<std::string> graph_paths;
  bool majority = false;
  std::string train_dataset_path;
  std::string answer_space_path;
  std::string split_path;
  std::string subset;
  std::string out = "-";
};

int run_eval(const EvalArgs& args) {
  std::vector<c3::dataset::QaPair> pairs =
      c3::dataset::load_dataset(args.dataset_path);

  if (!args.split_path.empty()) {
    c3::dataset::SplitAssignment split = c3::dataset::load_split(args.split_path);
    const std::vector<std::string>* keep = nullptr;
    if (args.subset == "train") keep = &split.train;
    else if (args.subset == "val") keep = &split.val;
    else if (args.subset == "test") keep = &split.test;
    else throw c3::ConfigError("--subset must be train, val, or test");
    std::set<std::string> qids(keep->begin(), keep->end());
    std::erase_if(pairs, [&](const c3::dataset::QaPair& p) {
      return !qids.count(p.qid);
    });
  }

  c3::evalh::PredictionSet preds;
  std::string source;
  auto warn = [](const std::string& msg) { std::cerr << "eval: " << msg << "\n"; };
  if (args.oracle) {
    std::vector<c3::SceneGraph> graphs = load_graphs(args.graph_paths);
    std::vector<const c3::SceneGraph*> ptrs;
    for (const c3::SceneGraph& g : graphs) ptrs.push_back(&g);
    preds = c3::evalh::oracle_predictions(pairs, ptrs);
    source = "oracle";
  } else if (args.majority) {
    std::vector<c3::dataset::QaPair> train =
        c3::dataset::load_dataset(args.train_dataset_path);
    preds = c3::evalh::majority_baseline(train, pairs);
    source = "majority(" + args.train_dataset_path + ")";
  } else {
    preds = c3::evalh::load_predictions_file(args.predictions_path, warn);
    source = args.predictions_path;
  }

  std::optional<c3::dataset::AnswerSpace> space;
  if (!args.answer_space_path.empty()) {
    space = c3::dataset::load_answer_space(args.answer_space_path);
  }

  c3::evalh::EvalReport report =
      c3::evalh::evaluate(pairs, preds, space ? &*space : nullptr, warn);

  nlohmann::ordered_json metadata;
  metadata["dataset"] = args.dataset_path;
  metadata["dataset_hash"] = file_hash_hex(args.dataset_path);
  metadata["predictions"] = source;
  metadata["questions"] = pairs.size();
  if (!args.subset.empty()) metadata["subset"] = args.subset;
  write_text(args.out,
             c3::evalh::report_to_json(report, metadata).dump(2) + "\n");
  std::cerr << "eval: acc@1 " << report.overall.acc1() << ", acc@10 "
            << report.overall.acc10() << " over " << report.overall.count
            << " questions\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string dataset_path;
  std::string answer_space_out;
  std::string out = "-";
};

int run_stats(const StatsArgs& args) {
  std::vector<c3::dataset::QaPair> pairs =
      c3::dataset::load_dataset(args.dataset_path);
  std::map<std::string, std::uint64_t> by_category;
  std::map<std::string, std::uint64_t> by_hops;
  std::map<std::uint64_t, std::uint64_t> length_histogram;
  std::map<std::string, std::uint64_t> by_city;
  for (const c3::dataset::QaPair& p : pairs) {
    ++by_category[std::string(c3::templates::to_string(p.category))];
    ++by_hops[std::string(c3::templates::to_string(p.hops))];
    ++by_city[p.city];
    std::uint64_t words = 0;
    std::istringstream ss(p.question);
    std::string tok;
    while (ss >> tok) ++words;
    ++length_histogram[words];
  }
  const double total = pairs.empty() ? 1.0 : static_cast<double>(pairs.size());

  nlohmann::ordered_json j;
  j["total"] = pairs.size();
  j["by_category"] = nlohmann::ordered_json::object();
  for (const auto& [cat, n] : by_category) {
    j["by_category"][cat] = {{"count", n},
                             {"fraction", static_cast<double>(n) / total}};
  }
  j["by_hops"] = nlohmann::ordered_json::object();
  for (const auto& [hops, n] : by_hops) {
    j["by_hops"][hops] = {{"count", n},
                          {"fraction", static_cast<double>(n) / total}};
  }
  j["by_city"] = by_city;
  j["question_length_words"] = nlohmann::ordered_json::object();
  for (const auto& [len, n] : length_histogram) {
    j["question_length_words"][std::to_string(len)] = n;
  }
  c3::dataset::AnswerSpace space = c3::dataset::build_answer_space(pairs);
  j["answer_space_size"] = space.entries.size();

  if (!args.answer_space_out.empty()) {
    write_text(args.answer_space_out,
               c3::dataset::answer_space_to_json(space).dump(2) + "\n");
  }
  write_text(args.out, j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// query

struct QueryArgs {
  std::string graph_path;
  std::string template_id;
  std::vector<std::string> binds;
  double near_radius = 100.0;
  bool repl = false;
};

c3::templates::Binding make_binding(const c3::templates::QuestionTemplate& t,
                                    const std::map<std::string, std::string>& raw,
                                    const c3::GraphIndex& idx) {
  c3::templates::Binding binding;
  for (c3::templates::SlotKind slot : t.slots) {
    const std::string key(c3::templates::slot_key(slot));
    auto it = raw.find(key);
    if (it == raw.end()) {
      throw c3::InstantiationError("missing --bind for slot '" + key + "'");
    }
    std::string value = it->second;
    std::optional<std::string> region;
    if (auto bar = value.find('|'); bar != std::string::npos) {
      region = value.substr(bar + 1);
      value = value.substr(0, bar);
    }
    c3::templates::BoundSlot bound;
    bound.slot = slot;
    bound.value = value;
    if (c3::templates::slot_is_reference(t.semantics, slot)) {
      std::string display = "the " + value;
      if (region) display += " in the " + *region;
      const c3::Instance& inst = c3::oracle::resolve_reference(
          idx, c3::oracle::InstanceRef::by_label(value, region, display));
      bound.instance_id = inst.id;
      bound.surface = display;
    } else {
      if (region) {
        throw c3::InstantiationError("slot '" + key +
                                     "' takes a plain value, no '|' region");
      }
      bound.surface = value;
    }
    binding.slots.push_back(std::move(bound));
  }
  return binding;
}

int answer_one(const c3::templates::QuestionTemplate& t,
               const std::map<std::string, std::string>& raw,
               const c3::GraphIndex& idx, const c3::oracle::OracleParams& params) {
  c3::templates::Binding binding = make_binding(t, raw, idx);
  std::cout << "question: " << c3::templates::instantiate(t, binding) << "\n";
  c3::oracle::Answer answer = c3::oracle::answer(idx, t, binding, params);
  std::cout << "answer: " << answer.value << "\n";
  return kExitOk;
}

int run_query(const QueryArgs& args) {
  c3::SceneGraph graph = c3::load_scene_graph(args.graph_path);
  c3::GraphIndex idx(graph);
  c3::oracle::OracleParams params;
  params.near_radius = args.near_radius;

  auto parse_binds = [](const std::vector<std::string>& binds) {
    std::map<std::string, std::string> raw;
    for (const std::string& b : binds) {
      auto eq = b.find('=');
      if (eq == std::string::npos) {
        throw c3::InstantiationError("--bind expects slot=value, got '" + b +
                                     "'");
      }
      raw[b.substr(0, eq)] = b.substr(eq + 1);
    }
    return raw;
  };

  if (!args.repl) {
    const c3::templates::QuestionTemplate* t =
        c3::templates::find_template(args.template_id);
    if (!t) {
      throw c3::RegistryError("unknown template id '" + args.template_id + "'");
    }
    return answer_one(*t, parse_binds(args.binds), idx, params);
  }

  std::cout << "templates (enter an id, blank to list, 'quit' to exit):\n";
  std::string line;
  while (true) {
    std::cout << "> template id: " << std::flush;
    if (!std::getline(std::cin, line)) break;
    if (line == "quit" || line == "exit") break;
    if (line.empty()) {
      for (const auto& t : c3::templates::load_registry()) {
        std::cout << "  " << t.id << "  " << t.pattern << "\n";
      }
      continue;
    }
    const c3::templates::QuestionTemplate* t = c3::templates::find_template(line);
    if (!t) {
      std::cout << "unknown template id\n";
      continue;
    }
    std::map<std::string, std::string> raw;
    bool aborted = false;
    for (c3::templates::SlotKind slot : t->slots) {
      const std::string key(c3::templates::slot_key(slot));
      const bool is_ref = c3::templates::slot_is_reference(t->semantics, slot);
      std::cout << "> " << key << (is_ref ? " (label or label|region): "
                                          : ": ")
                << std::flush;
      if (!std::getline(std::cin, line) || line.empty()) {
        aborted = true;
        break;
      }
      raw[key] = line;
    }
    if (aborted) {
      std::cout << "(aborted)\n";
      continue;
    }
    try {
      answer_one(*t, raw, idx, params);
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "city3dqa: spatial-semantic scene graphs and grounded QA datasets from "
      "instance-segmented city point clouds"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  IngestArgs ingest_args;
  CLI::App* ingest = app.add_subcommand(
      "ingest", "Stream a labeled point cloud into a scene manifest");
  ingest->add_option("--input", ingest_args.input,
                     "XYZCI text or C3PC binary point file")->required();
  ingest->add_option("--format", ingest_args.format,
                     "auto|xyzci|c3pc (default auto)")
      ->check(CLI::IsMember({"auto", "xyzci", "c3pc"}));
  ingest->add_option("--class-map", ingest_args.class_map_path,
                     "JSON object class_id -> class_label")->required();
  ingest->add_option("--lexicon", ingest_args.lexicon_path,
                     "lexicon JSON; fills category labels from class labels");
  ingest->add_option("--category-overrides", ingest_args.overrides_path,
                     "JSON object instance_id -> category_label");
  ingest->add_option("--city", ingest_args.city, "city name")->required();
  ingest->add_option("--scene-id", ingest_args.scene_id, "scene id")->required();
  ingest->add_option("--out", ingest_args.out, "manifest path ('-' stdout)")
      ->required();

  GraphArgs graph_args;
  CLI::App* graph = app.add_subcommand(
      "graph", "Build a spatial-semantic scene graph from a manifest");
  graph->add_option("--manifest", graph_args.manifest_path, "scene manifest")
      ->required();
  graph->add_option("--lexicon", graph_args.lexicon_path, "lexicon JSON")
      ->required();
  graph->add_option("--regions", graph_args.regions_path, "region map JSON")
      ->required();
  graph->add_option("--edge-policy", graph_args.edge_policy,
                    "all_pairs|k_nearest (default all_pairs)")
      ->check(CLI::IsMember({"all_pairs", "k_nearest"}));
  graph->add_option("--k", graph_args.k, "neighbor count for k_nearest");
  graph->add_option("--front-bearing", graph_args.front_bearing,
                    "bearing of 'front' in degrees ccw from +x (default 90)");
  graph->add_option("--out", graph_args.out, "scene graph path ('-' stdout)")
      ->required();

  GenerateArgs gen_args;
  CLI::App* generate = app.add_subcommand(
      "generate", "Generate grounded QA pairs from scene graphs");
  generate->add_option("--graphs", gen_args.graph_paths,
                       "scene graph files")->required()->expected(-1);
  generate->add_option("--seed", gen_args.seed, "master seed (default 0)");
  generate->add_option("--per-template-limit", gen_args.per_template_limit,
                       "uniform binding cap per template per scene");
  generate->add_option("--synonym-probability", gen_args.synonym_probability,
                       "chance a bound label is reworded (default 0.3)")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--near-radius", gen_args.near_radius,
                       "meters counted as 'near' (default 100)")
      ->check(CLI::PositiveNumber);
  generate->add_option("--jobs", gen_args.jobs, "worker threads (default 1)");
  generate->add_option("--templates", gen_args.templates_path,
                       "extra user templates JSON, merged with built-ins");
  generate->add_flag("--paraphrase", gen_args.paraphrase,
                     "reword questions through an LLM endpoint");
  generate->add_option("--llm-endpoint", gen_args.llm_endpoint,
                       "chat-completion endpoint URL");
  generate->add_option("--llm-model", gen_args.llm_model,
                       "model name (default gpt-3.5-turbo)");
  generate->add_option("--llm-temperature", gen_args.llm_temperature,
                       "sampling temperature (default 0.7)");
  generate->add_option("--llm-timeout", gen_args.llm_timeout,
                       "per-call timeout seconds (default 30)");
  generate->add_flag("--verbose", gen_args.verbose, "chatty stderr");
  generate->add_option("--out", gen_args.out, "dataset path ('-' stdout)")
      ->required();

  SplitArgs split_args;
  CLI::App* split = app.add_subcommand(
      "split", "Partition a dataset sentence-wise or city-wise");
  split->add_option("--dataset", split_args.dataset_path, "QA dataset (jsonl)")
      ->required();
  split->add_option("--mode", split_args.mode,
                    "sentence_wise|city_wise (default sentence_wise)")
      ->check(CLI::IsMember({"sentence_wise", "city_wise"}));
  split->add_option("--ratios", split_args.ratios,
                    "train val test ratios (default 0.69 0.17 0.14)")
      ->expected(3);
  split->add_option("--seed", split_args.seed, "shuffle seed (default 0)");
  split->add_option("--train-cities", split_args.train_cities,
                    "cities for the training set");
  split->add_option("--val-cities", split_args.val_cities,
                    "cities for the validation set");
  split->add_option("--test-cities", split_args.test_cities,
                    "cities for the test set");
  split->add_option("--out", split_args.out, "split manifest path ('-' stdout)")
      ->required();

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "Score ranked predictions with Top@1 / Top@10");
  eval->add_option("--dataset", eval_args.dataset_path, "QA dataset (jsonl)")
      ->required();
  eval->add_option("--predictions", eval_args.predictions_path,
                   "prediction file: one {qid, answers[<=10]} per line");
  eval->add_flag("--oracle", eval_args.oracle,
                 "score the oracle's own answers (needs --graphs)");
  eval->add_option("--graphs", eval_args.graph_paths,
                   "scene graphs for --oracle")->expected(-1);
  eval->add_flag("--majority", eval_args.majority,
                 "score the majority baseline (needs --train-dataset)");
  eval->add_option("--train-dataset", eval_args.train_dataset_path,
                   "training pairs for --majority");
  eval->add_option("--answer-space", eval_args.answer_space_path,
                   "answer space JSON; counts out-of-space golds");
  eval->add_option("--split", eval_args.split_path, "split manifest");
  eval->add_option("--subset", eval_args.subset,
                   "train|val|test subset of --split");
  eval->add_option("--out", eval_args.out, "report path (default stdout)");

  StatsArgs stats_args;
  CLI::App* stats = app.add_subcommand(
      "stats", "Dataset distribution summary (categories, hops, lengths)");
  stats->add_option("--dataset", stats_args.dataset_path, "QA dataset (jsonl)")
      ->required();
  stats->add_option("--write-answer-space", stats_args.answer_space_out,
                    "also write the answer space JSON here");
  stats->add_option("--out", stats_args.out, "stats path (default stdout)");

  QueryArgs query_args;
  CLI::App* query = app.add_subcommand(
      "query", "Answer a template instance against a scene graph");
  query->add_option("--graph", query_args.graph_path, "scene graph file")
      ->required();
  query->add_option("--template", query_args.template_id, "template id");
  query->add_option("--bind", query_args.binds,
                    "slot=value (use value|region to disambiguate)");
  query->add_option("--near-radius", query_args.near_radius,
                    "meters counted as 'near' (default 100)");
  query->add_flag("--repl", query_args.repl, "interactive read-answer loop");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ingest) return run_ingest(ingest_args);
    if (*graph) return run_graph(graph_args);
    if (*generate) return run_generate(gen_args);
    if (*split) return run_split(split_args);
    if (*eval) return run_eval(eval_args);
    if (*stats) return run_stats(stats_args);
    if (*query) {
      if (!query_args.repl && query_args.template_id.empty()) {
        std::cerr << "query: --template is required unless --repl is set\n";
        return kExitUsage;
      }
      return run_query(query_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
