#include "situgen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/jsonl.hpp"
#include "text_util.hpp"

namespace situgen {

using json = nlohmann::json;

namespace {

/// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
/// failure after every thread has stopped.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

template <typename Fn>
auto staged(const std::string& stage, const std::string& scene_id, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, scene_id.empty() ? std::string(e.what()) : scene_id + ": " + e.what());
  }
}

std::string mode_name(GenerationMode mode) { return mode == GenerationMode::llm ? "llm" : "template"; }

bool same_answer(Category category, const std::string& answer, const std::string& expected) {
  if (category == Category::counting) {
    const auto a = parse_count_answer(answer);
    const auto e = parse_count_answer(expected);
    return a && e && *a == *e;
  }
  if (category == Category::existence) {
    const auto a = parse_yes_no(answer);
    const auto e = parse_yes_no(expected);
    return a && e && *a == *e;
  }
  return answer == expected;
}

struct SceneOutput {
  std::vector<SituationRecord> situations;
  std::vector<SituatedGraph> graphs;
  std::vector<QAPair> qa;
  std::vector<MsnnRecord> msnn;
};

}  // namespace

json RunConfig::to_json() const {
  json types = json::array();
  for (const auto t : situation_types) types.push_back(to_string(t));
  json out = {
      {"seed", seed},
      {"scenes_dir", scenes_dir.generic_string()},
      {"out_dir", out_dir.generic_string()},
      {"relations", relations.to_json()},
      {"sampler",
       {{"cell", sampler.raster.cell},
        {"clearance", sampler.raster.clearance},
        {"obstacle_min_height", sampler.raster.obstacle_min_height},
        {"obstacle_max_height", sampler.raster.obstacle_max_height},
        {"interaction_radius", sampler.interaction_radius},
        {"seat_shrink", sampler.seat_shrink},
        {"large_volume_threshold", sampler.large_volume_threshold}}},
      {"mix", mix.to_json()},
      {"situation_types", types},
      {"situations_per_scene", situations_per_scene},
      {"qa_per_scene", qa_per_scene},
      {"negatives_per_situation", negatives_per_situation},
      {"msnn_per_scene", msnn_per_scene},
      {"location_objects", location_objects},
      {"goal_radius", goal_radius},
      {"balance_tolerance", balance_tolerance},
      {"mode", mode_name(mode)},
      {"llm_model", llm_model},
      {"offline", offline},
  };
  if (relation_config_path) out["relation_config_path"] = relation_config_path->generic_string();
  return out;
}

RunConfig RunConfig::from_json(const json& value) {
  if (!value.is_object()) throw SchemaError("config", "expected an object");
  RunConfig c;
  try {
    c.seed = value.value("seed", c.seed);
    c.scenes_dir = value.value("scenes_dir", c.scenes_dir.string());
    c.out_dir = value.value("out_dir", c.out_dir.string());
    if (value.contains("relation_config_path")) {
      c.relation_config_path = value.at("relation_config_path").get<std::string>();
      c.relations = RelationConfig::load(*c.relation_config_path);
    }
    if (value.contains("relations")) c.relations = RelationConfig::from_json(value.at("relations"));
    if (value.contains("sampler")) {
      const json& s = value.at("sampler");
      c.sampler.raster.cell = s.value("cell", c.sampler.raster.cell);
      c.sampler.raster.clearance = s.value("clearance", c.sampler.raster.clearance);
      c.sampler.raster.obstacle_min_height = s.value("obstacle_min_height", c.sampler.raster.obstacle_min_height);
      c.sampler.raster.obstacle_max_height = s.value("obstacle_max_height", c.sampler.raster.obstacle_max_height);
      c.sampler.interaction_radius = s.value("interaction_radius", c.sampler.interaction_radius);
      c.sampler.seat_shrink = s.value("seat_shrink", c.sampler.seat_shrink);
      c.sampler.large_volume_threshold = s.value("large_volume_threshold", c.sampler.large_volume_threshold);
    }
    if (value.contains("mix")) c.mix = CategoryMix::from_json(value.at("mix"));
    if (value.contains("situation_types")) {
      c.situation_types.clear();
      for (const auto& t : value.at("situation_types")) {
        const auto type = interaction_from_string(t.get<std::string>());
        if (!type) throw SchemaError("situation_types", "unknown situation type " + t.dump());
        c.situation_types.push_back(*type);
      }
      if (c.situation_types.empty()) throw SchemaError("situation_types", "must not be empty");
    }
    c.situations_per_scene = value.value("situations_per_scene", c.situations_per_scene);
    c.qa_per_scene = value.value("qa_per_scene", c.qa_per_scene);
    c.negatives_per_situation = value.value("negatives_per_situation", c.negatives_per_situation);
    c.msnn_per_scene = value.value("msnn_per_scene", c.msnn_per_scene);
    c.location_objects = value.value("location_objects", c.location_objects);
    c.goal_radius = value.value("goal_radius", c.goal_radius);
    c.balance_tolerance = value.value("balance_tolerance", c.balance_tolerance);
    const std::string mode = value.value("mode", std::string("template"));
    if (mode == "template") {
      c.mode = GenerationMode::templated;
    } else if (mode == "llm") {
      c.mode = GenerationMode::llm;
    } else {
      throw SchemaError("mode", "expected template or llm, got " + mode);
    }
    c.llm_model = value.value("llm_model", c.llm_model);
    c.offline = value.value("offline", c.offline);
    c.workers = value.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw SchemaError("config", e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config " + path.string());
  }
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

MsnnConfig RunConfig::msnn_config() const {
  MsnnConfig m;
  m.sampler = sampler;
  m.goal_radius = goal_radius;
  m.location_objects = location_objects;
  m.relations = relations;
  return m;
}

json situation_record_to_json(const SituationRecord& r) {
  return {{"situation_id", r.situation_id}, {"scene_id", r.scene_id}, {"situation", situation_to_json(r.situation)}};
}

SituationRecord situation_record_from_json(const json& value) {
  SituationRecord r;
  try {
    r.situation_id = value.at("situation_id").get<std::string>();
    r.scene_id = value.at("scene_id").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError("situation_id", e.what());
  }
  r.situation = situation_from_json(value.at("situation"));
  return r;
}

std::vector<SituationRecord> sample_situations(const Scene& scene, int n, const std::vector<Interaction>& types,
                                               Rng& rng, const HoiBank& bank, const RunConfig& config,
                                               ChatClient* llm) {
  if (types.empty()) {
    throw Error("no situation types requested");
  }
  const SituationSampler sampler(scene, config.sampler);
  std::vector<SituationRecord> out;
  for (int i = 0; i < n; ++i) {
    std::optional<Situation> s;
    std::string last_error;
    for (std::size_t k = 0; k < types.size() && !s; ++k) {
      try {
        s = canonicalized(sampler.sample(types[(static_cast<std::size_t>(i) + k) % types.size()], rng));
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    if (!s) {
      throw Error("scene " + scene.scene_id + " cannot host any requested situation type: " + last_error);
    }
    s->action_text = render_action_description(*s, scene, bank, rng);
    s->location_text =
        render_location_description(scene, *s, config.location_objects, llm, config.relations, config.llm_model);
    out.push_back({scene.scene_id + ":s" + std::to_string(i), scene.scene_id, std::move(*s)});
  }
  return out;
}

std::vector<QAPair> generate_for_scene(const Scene& scene, const std::vector<SituatedGraph>& graphs,
                                       const RunConfig& config, Rng& rng, ChatClient* llm,
                                       const QaResources& resources) {
  std::vector<QAPair> out;
  if (graphs.empty()) return out;
  if (config.mode == GenerationMode::llm) {
    if (llm == nullptr) {
      throw Error("llm mode needs a chat client");
    }
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      QaPromptConfig prompt_config;
      prompt_config.combination_index = derive_seed(config.seed, graphs[g].situation_id);
      const PromptBundle prompt = build_qa_prompt(graphs[g], resources.seeds, prompt_config);
      const LlmParseResult parsed = parse_llm_output(llm->complete(prompt.to_chat_request(config.llm_model)));
      for (const auto& p : parsed.pairs) {
        QAPair qa = p;
        qa.scene_id = graphs[g].scene_id;
        qa.situation_id = graphs[g].situation_id;
        qa.situation = graphs[g].situation;
        qa.question = interleave(p.question.flat(), &scene);
        out.push_back(std::move(qa));
      }
    }
  } else {
    const auto schedule = schedule_categories(config.mix, config.qa_per_scene);
    // wanted[g][c]: slots of category c dealt to graph g
    std::vector<std::array<int, 9>> wanted(graphs.size(), std::array<int, 9>{});
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      ++wanted[i % graphs.size()][static_cast<std::size_t>(schedule[i])];
    }
    for (std::size_t g = 0; g < graphs.size(); ++g) {
      for (const auto category : kAllCategories) {
        auto batch = generate_templated(graphs[g], category, rng, wanted[g][static_cast<std::size_t>(category)],
                                        resources);
        std::move(batch.begin(), batch.end(), std::back_inserter(out));
      }
    }
  }
  for (const auto& graph : graphs) {
    auto batch = augment_negative_existence(scene, graph, resources.wild, rng, config.negatives_per_situation,
                                            resources);
    std::move(batch.begin(), batch.end(), std::back_inserter(out));
  }
  std::map<std::string, int> counters;
  for (auto& qa : out) {
    qa.qa_id = qa.situation_id + ":q" + std::to_string(counters[qa.situation_id]++);
  }
  return out;
}

double StatsReport::yes_ratio() const {
  return yes + no == 0 ? 0.0 : static_cast<double>(yes) / static_cast<double>(yes + no);
}

json StatsReport::to_json() const {
  return {{"total", total},
          {"per_category", per_category},
          {"per_provenance", per_provenance},
          {"yes", yes},
          {"no", no},
          {"yes_ratio", yes_ratio()},
          {"per_scene", per_scene},
          {"situation_types", situation_types},
          {"avg_question_tokens", avg_question_tokens},
          {"avg_answer_tokens", avg_answer_tokens}};
}

StatsReport compute_stats(const std::vector<QAPair>& dataset) {
  StatsReport r;
  for (const auto c : kAllCategories) r.per_category[std::string(to_string(c))] = 0;
  std::set<std::string> seen_situations;
  std::size_t q_tokens = 0;
  std::size_t a_tokens = 0;
  for (const auto& qa : dataset) {
    ++r.total;
    ++r.per_category[std::string(to_string(qa.category))];
    ++r.per_provenance[std::string(to_string(qa.provenance))];
    ++r.per_scene[qa.scene_id];
    if (qa.category == Category::existence) {
      if (const auto yes = parse_yes_no(qa.answer)) {
        ++(*yes ? r.yes : r.no);
      }
    }
    if (seen_situations.insert(qa.situation_id).second) {
      ++r.situation_types[std::string(to_string(qa.situation.interaction))];
    }
    q_tokens += text::split_words(qa.question.flat()).size();
    a_tokens += text::split_words(qa.answer).size();
  }
  if (r.total > 0) {
    r.avg_question_tokens = static_cast<double>(q_tokens) / static_cast<double>(r.total);
    r.avg_answer_tokens = static_cast<double>(a_tokens) / static_cast<double>(r.total);
  }
  return r;
}

StatsReport stats_for_file(const std::filesystem::path& dataset) { return compute_stats(load_dataset(dataset)); }

std::vector<QAPair> load_dataset(const std::filesystem::path& path) {
  std::vector<QAPair> out;
  read_jsonl(path, [&](const json& value, std::size_t) { out.push_back(qa_from_json(value)); });
  return out;
}

std::vector<MsnnRecord> load_msnn(const std::filesystem::path& path) {
  std::vector<MsnnRecord> out;
  read_jsonl(path, [&](const json& value, std::size_t) { out.push_back(msnn_from_json(value)); });
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<QAPair>& dataset, const json& header) {
  json h = header;
  h["kind"] = "dataset";
  JsonlWriter out(path, h);
  for (const auto& qa : dataset) out.write(qa_to_json(qa));
  out.close();
}

void write_msnn(const std::filesystem::path& path, const std::vector<MsnnRecord>& records, const json& header) {
  json h = header;
  h["kind"] = "msnn";
  JsonlWriter out(path, h);
  for (const auto& r : records) out.write(msnn_to_json(r));
  out.close();
}

std::filesystem::path graph_file_name(const std::string& situation_id) {
  std::string name = situation_id;
  std::replace(name.begin(), name.end(), ':', '_');
  std::replace(name.begin(), name.end(), '/', '_');
  return name + ".json";
}

GraphIndex load_graph_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("graph directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  GraphIndex out;
  for (const auto& file : files) {
    std::ifstream in(file);
    try {
      SituatedGraph g = graph_from_json(json::parse(in));
      std::string id = g.situation_id;
      out.emplace(std::move(id), std::move(g));
    } catch (const std::exception& e) {
      throw Error(file.string() + ": " + e.what());
    }
  }
  return out;
}

RunResult run_pipeline(const RunConfig& config, ChatClient* llm) {
  const auto scenes = staged("load", "", [&] {
    if (!std::filesystem::is_directory(config.scenes_dir)) {
      throw Error("scene directory not found: " + config.scenes_dir.string());
    }
    auto pack = load_scene_pack(config.scenes_dir);
    if (pack.empty()) throw Error("no scenes in " + config.scenes_dir.string());
    return pack;
  });
  if (config.mode == GenerationMode::llm && llm == nullptr) {
    throw StageError("generate", "llm mode needs a chat client");
  }
  ChatClient* text_llm = config.mode == GenerationMode::llm ? llm : nullptr;
  const HoiBank bank = HoiBank::bundled();
  const QaResources& resources = QaResources::bundled();

  std::vector<SceneOutput> outputs(scenes.size());
  parallel_for(scenes.size(), config.workers, [&](std::size_t i) {
    const Scene& scene = scenes[i];
    SceneOutput& out = outputs[i];
    Rng situation_rng(derive_seed(config.seed, "situations:" + scene.scene_id));
    out.situations = staged("sample", scene.scene_id, [&] {
      return sample_situations(scene, config.situations_per_scene, config.situation_types, situation_rng, bank,
                               config, text_llm);
    });
    staged("graph", scene.scene_id, [&] {
      for (const auto& s : out.situations) {
        out.graphs.push_back(build_situated_graph(scene, s.situation, config.relations, s.situation_id));
      }
    });
    Rng qa_rng(derive_seed(config.seed, "qa:" + scene.scene_id));
    out.qa = staged("generate", scene.scene_id,
                    [&] { return generate_for_scene(scene, out.graphs, config, qa_rng, text_llm, resources); });
    Rng msnn_rng(derive_seed(config.seed, "msnn:" + scene.scene_id));
    staged("msnn", scene.scene_id, [&] {
      const MsnnGenerator generator(scene, config.msnn_config(), bank);
      for (int k = 0; k < config.msnn_per_scene; ++k) {
        auto record = generator.generate(msnn_rng, text_llm, config.llm_model);
        if (!record) continue;
        record->record_id = scene.scene_id + ":m" + std::to_string(out.msnn.size());
        out.msnn.push_back(std::move(*record));
      }
    });
  });

  RunResult result;
  GraphIndex index;
  std::vector<QAPair> batch;
  for (auto& out : outputs) {
    std::move(out.situations.begin(), out.situations.end(), std::back_inserter(result.situations));
    for (auto& g : out.graphs) {
      index.emplace(g.situation_id, g);
      result.graphs.push_back(std::move(g));
    }
    std::move(out.qa.begin(), out.qa.end(), std::back_inserter(batch));
    std::move(out.msnn.begin(), out.msnn.end(), std::back_inserter(result.msnn));
  }
  auto [refined, report] =
      staged("refine", "", [&] { return refine_batch(std::move(batch), index, default_negative_patterns(), resources); });
  Rng balance_rng(derive_seed(config.seed, "balance"));
  auto [balanced, balance_report] = staged("balance", "", [&] {
    return balance_existence(std::move(refined), index, resources.wild, balance_rng, config.balance_tolerance,
                             resources);
  });
  report.merge(balance_report);
  result.dataset = std::move(balanced);
  result.refinement = std::move(report);
  result.stats = compute_stats(result.dataset);
  return result;
}

void write_run(const RunResult& result, const RunConfig& config) {
  staged("write", "", [&] {
    const auto& dir = config.out_dir;
    std::filesystem::create_directories(dir / "graphs");
    const json header = config.to_json();
    write_dataset(dir / "dataset.jsonl", result.dataset, header);
    write_msnn(dir / "msnn.jsonl", result.msnn, header);
    {
      JsonlWriter situations(dir / "situations.jsonl", header);
      for (const auto& s : result.situations) situations.write(situation_record_to_json(s));
      situations.close();
    }
    for (const auto& g : result.graphs) {
      std::ofstream out(dir / "graphs" / graph_file_name(g.situation_id), std::ios::binary);
      out << graph_to_json(g).dump(2) << '\n';
      if (!out) throw Error("cannot write graph " + g.situation_id);
    }
    std::ofstream report(dir / "refinement_report.json", std::ios::binary);
    report << result.refinement.to_json().dump(2) << '\n';
    std::ofstream stats(dir / "stats.json", std::ios::binary);
    stats << result.stats.to_json().dump(2) << '\n';
    if (!report || !stats) throw Error("cannot write reports under " + dir.string());
  });
}

VerifyReport verify_file(const std::filesystem::path& path, const std::optional<std::filesystem::path>& scenes_dir) {
  const auto header = read_jsonl_header(path);
  if (!header) {
    throw Error(path.string() + ": missing run header");
  }
  RunConfig config = RunConfig::from_json(*header);
  if (scenes_dir) config.scenes_dir = *scenes_dir;
  const auto pack = load_scene_pack(config.scenes_dir);
  std::map<std::string, const Scene*> scenes;
  for (const auto& s : pack) scenes[s.scene_id] = &s;

  VerifyReport report;
  report.kind = header->value("kind", std::string());
  const auto problem = [&](const std::string& id, const std::string& what) {
    report.problems.push_back(id + ": " + what);
  };
  const auto scene_for = [&](const std::string& id, const std::string& scene_id) -> const Scene* {
    const auto it = scenes.find(scene_id);
    if (it == scenes.end()) {
      problem(id, "unknown scene " + scene_id);
      return nullptr;
    }
    return it->second;
  };
  const auto check_texts = [&](const std::string& id, const Scene& scene, const Situation& s) {
    if (!has_referential_integrity(s.action_text, scene)) problem(id, "action text references a missing object");
    if (!has_referential_integrity(s.location_text, scene)) problem(id, "location text references a missing object");
  };

  if (report.kind == "dataset") {
    const auto dataset = load_dataset(path);
    report.records = dataset.size();
    std::set<std::string> ids;
    std::map<std::string, SituatedGraph> graphs;
    for (const auto& qa : dataset) {
      if (!ids.insert(qa.qa_id).second) problem(qa.qa_id, "duplicate qa_id");
      const Scene* scene = scene_for(qa.qa_id, qa.scene_id);
      if (scene == nullptr) continue;
      check_texts(qa.qa_id, *scene, qa.situation);
      if (!has_referential_integrity(qa.question, *scene)) problem(qa.qa_id, "question references a missing object");
      auto it = graphs.find(qa.situation_id);
      if (it == graphs.end()) {
        it = graphs.emplace(qa.situation_id, build_situated_graph(*scene, qa.situation, config.relations,
                                                                  qa.situation_id)).first;
      }
      const auto review = qa.meta.find("review");
      const std::string state = review == qa.meta.end() ? std::string() : review->second;
      if (state == "flagged" || state == "fixed") continue;
      const bool graph_checked = qa.provenance != Provenance::llm || qa.category == Category::counting ||
                                 qa.category == Category::existence;
      if (!graph_checked) continue;
      const auto expected = expected_answer(qa.question, qa.category, it->second, QaResources::bundled());
      if (!expected) {
        if (qa.provenance != Provenance::llm) problem(qa.qa_id, "question cannot be answered from the graph");
        continue;
      }
      if (!same_answer(qa.category, qa.answer, *expected)) {
        problem(qa.qa_id, "answer '" + qa.answer + "' but the graph gives '" + *expected + "'");
      }
    }
  } else if (report.kind == "msnn") {
    const auto records = load_msnn(path);
    report.records = records.size();
    const HoiBank bank = HoiBank::bundled();
    std::map<std::string, std::unique_ptr<MsnnGenerator>> generators;
    std::set<std::string> ids;
    for (const auto& r : records) {
      if (!ids.insert(r.record_id).second) problem(r.record_id, "duplicate record_id");
      const Scene* scene = scene_for(r.record_id, r.scene_id);
      if (scene == nullptr) continue;
      check_texts(r.record_id, *scene, r.start);
      auto& gen = generators[r.scene_id];
      if (!gen) gen = std::make_unique<MsnnGenerator>(*scene, config.msnn_config(), bank);
      for (const auto& p : gen->check(r)) problem(r.record_id, p);
    }
  } else {
    throw Error(path.string() + ": header names no known file kind");
  }
  return report;
}

}  // namespace situgen
