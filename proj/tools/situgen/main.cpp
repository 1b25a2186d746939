// situgen command-line front end.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/evaluation.hpp"
#include "situgen/graph.hpp"
#include "situgen/jsonl.hpp"
#include "situgen/llm.hpp"
#include "situgen/msnn.hpp"
#include "situgen/pipeline.hpp"
#include "situgen/refinement.hpp"
#include "situgen/serve.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace situgen;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
};

RunConfig base_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : RunConfig::load(config_path);
}

std::vector<Interaction> parse_types(const std::string& list) {
  std::vector<Interaction> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto t = interaction_from_string(item);
    if (!t) throw Error("unknown situation type '" + item + "'");
    out.push_back(*t);
  }
  if (out.empty()) throw Error("no situation types given");
  return out;
}

std::shared_ptr<ChatClient> chat_client(bool offline) {
  return make_chat_client(LlmSettings::from_environment(), offline);
}

void write_json_file(const fs::path& path, const json& value) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << value.dump(2) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::atomic<ReviewServer*> g_server{nullptr};

void on_signal(int) {
  if (ReviewServer* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Situated scene QA and navigation data generator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "situgen 0.1.0");

  // sample-situations
  auto* sample = app.add_subcommand("sample-situations", "Sample agent situations in one scene");
  std::string sample_scene, sample_out, sample_types = "standing,sitting,interact_large,interact_small", sample_config;
  int sample_n = 4;
  std::uint64_t sample_seed = 1;
  bool sample_offline = true;
  sample->add_option("--scene", sample_scene, "Scene JSON file")->required()->check(CLI::ExistingFile);
  sample->add_option("--n", sample_n, "Number of situations")->check(CLI::NonNegativeNumber);
  sample->add_option("--types", sample_types, "Comma-separated situation types");
  sample->add_option("--seed", sample_seed, "Random seed");
  sample->add_option("--out", sample_out, "Output JSONL")->required();
  sample->add_option("--config", sample_config, "Run config JSON")->check(CLI::ExistingFile);
  sample->add_flag("--offline,!--online", sample_offline, "Replay cached LLM responses only");

  // build-graph
  auto* build = app.add_subcommand("build-graph", "Build situated scene graphs");
  std::string build_scene, build_situations, build_out, build_relations;
  build->add_option("--scene", build_scene, "Scene JSON file")->required()->check(CLI::ExistingFile);
  build->add_option("--situations", build_situations, "Situations JSONL")->required()->check(CLI::ExistingFile);
  build->add_option("--out-dir", build_out, "Directory for graph JSON files")->required();
  build->add_option("--relation-config", build_relations, "Relation thresholds JSON")->check(CLI::ExistingFile);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate QA pairs for a scene pack");
  std::string gen_scenes, gen_out, gen_mode = "template", gen_config, gen_graphs;
  int gen_per_scene = -1;
  int gen_situations = -1;
  int gen_workers = 1;
  std::uint64_t gen_seed = 1;
  bool gen_offline = false;
  generate->add_option("--scenes", gen_scenes, "Scene pack directory")->required()->check(CLI::ExistingDirectory);
  generate->add_option("--per-scene", gen_per_scene, "QA pairs per scene");
  generate->add_option("--situations-per-scene", gen_situations, "Situations per scene");
  generate->add_option("--mode", gen_mode, "template or llm")->check(CLI::IsMember({"template", "llm"}));
  generate->add_option("--seed", gen_seed, "Random seed");
  generate->add_option("--out", gen_out, "Output dataset JSONL")->required();
  generate->add_option("--graphs-out", gen_graphs, "Directory for situated graphs (default: next to --out)");
  generate->add_option("--config", gen_config, "Run config JSON")->check(CLI::ExistingFile);
  generate->add_option("--workers", gen_workers, "Scenes processed in parallel")->check(CLI::PositiveNumber);
  generate->add_flag("--offline", gen_offline, "Replay cached LLM responses only");

  // refine
  auto* refine = app.add_subcommand("refine", "Validate, correct, filter and balance a dataset");
  std::string ref_in, ref_graphs, ref_verdicts, ref_out, ref_report;
  double ref_tolerance = 0.05;
  bool ref_no_balance = false;
  std::uint64_t ref_seed = 1;
  refine->add_option("--in", ref_in, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  refine->add_option("--graphs", ref_graphs, "Directory of situated graphs")->required()->check(CLI::ExistingDirectory);
  refine->add_option("--verdicts", ref_verdicts, "Review verdict JSONL")->check(CLI::ExistingFile);
  refine->add_option("--out", ref_out, "Refined dataset JSONL")->required();
  refine->add_option("--report", ref_report, "Refinement report JSON");
  refine->add_option("--balance-tolerance", ref_tolerance, "Allowed yes/no imbalance")->check(CLI::Range(0.0, 0.5));
  refine->add_flag("--no-balance", ref_no_balance, "Skip yes/no balancing");
  refine->add_option("--seed", ref_seed, "Random seed for balancing");

  // gen-msnn
  auto* msnn = app.add_subcommand("gen-msnn", "Generate next-step navigation records");
  std::string msnn_scenes, msnn_out, msnn_config;
  int msnn_per_scene = -1;
  int msnn_workers = 1;
  std::uint64_t msnn_seed = 1;
  bool msnn_offline = false;
  bool msnn_llm = false;
  msnn->add_option("--scenes", msnn_scenes, "Scene pack directory")->required()->check(CLI::ExistingDirectory);
  msnn->add_option("--per-scene", msnn_per_scene, "Records per scene");
  msnn->add_option("--seed", msnn_seed, "Random seed");
  msnn->add_option("--out", msnn_out, "Output JSONL")->required();
  msnn->add_option("--config", msnn_config, "Run config JSON")->check(CLI::ExistingFile);
  msnn->add_option("--workers", msnn_workers, "Scenes processed in parallel")->check(CLI::PositiveNumber);
  msnn->add_flag("--llm", msnn_llm, "Write goal sentences with the chat endpoint");
  msnn->add_flag("--offline", msnn_offline, "Replay cached LLM responses only");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score model predictions");
  std::string ev_dataset, ev_preds, ev_judge = "both", ev_report, ev_model, ev_msnn, ev_msnn_preds;
  bool ev_offline = false;
  int ev_parallelism = 4;
  std::size_t ev_containment = 3;
  evaluate_cmd->add_option("--dataset", ev_dataset, "Dataset JSONL")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--preds", ev_preds, "Predictions JSONL")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--judge", ev_judge, "llm, em or both")->check(CLI::IsMember({"llm", "em", "both"}));
  evaluate_cmd->add_option("--judge-model", ev_model, "Judge model (default SITUGEN_LLM_MODEL)");
  evaluate_cmd->add_option("--parallelism", ev_parallelism, "Concurrent judge calls")->check(CLI::PositiveNumber);
  evaluate_cmd->add_option("--em-containment", ev_containment, "Max tokens for refined-EM containment");
  evaluate_cmd->add_option("--msnn", ev_msnn, "MSNN JSONL")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--msnn-preds", ev_msnn_preds, "MSNN predictions JSONL")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--report", ev_report, "Report JSON (stdout when omitted)");
  evaluate_cmd->add_flag("--offline", ev_offline, "Replay cached judge responses only");

  // stats
  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  std::string stats_dataset, stats_out;
  stats->add_option("--dataset,dataset", stats_dataset, "Dataset JSONL")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", stats_out, "Write the report here instead of stdout");

  // verify
  auto* verify = app.add_subcommand("verify", "Re-check a pipeline output file against its scenes");
  std::string verify_file_path, verify_scenes;
  verify->add_option("file", verify_file_path, "Dataset or MSNN JSONL")->required()->check(CLI::ExistingFile);
  verify->add_option("--scenes", verify_scenes, "Scene pack (default: from the file header)")
      ->check(CLI::ExistingDirectory);

  // serve
  auto* serve = app.add_subcommand("serve", "Review API and UI");
  ServeConfig serve_config = ServeConfig::from_environment();
  std::string serve_addr = "127.0.0.1:8787", serve_static, serve_dataset, serve_scenes, serve_verdicts;
  serve->add_option("--dataset", serve_dataset, "Dataset JSONL");
  serve->add_option("--scenes", serve_scenes, "Scene pack directory");
  serve->add_option("--verdicts", serve_verdicts, "Verdict log JSONL");
  serve->add_option("--addr", serve_addr, "host:port to listen on");
  serve->add_option("--static", serve_static, "Review UI build directory")->check(CLI::ExistingDirectory);
  serve->add_option("--cors-origin", serve_config.cors_origin, "Allowed CORS origin");

  // run
  auto* run = app.add_subcommand("run", "Full pipeline: sample, graph, generate, refine, balance, MSNN, stats");
  std::string run_config, run_scenes, run_out;
  std::uint64_t run_seed = 1;
  int run_workers = 1;
  bool run_offline = false;
  run->add_option("--config", run_config, "Run config JSON")->check(CLI::ExistingFile);
  run->add_option("--scenes", run_scenes, "Scene pack directory")->check(CLI::ExistingDirectory);
  run->add_option("--out-dir", run_out, "Output directory");
  run->add_option("--seed", run_seed, "Random seed");
  run->add_option("--workers", run_workers, "Scenes processed in parallel")->check(CLI::PositiveNumber);
  run->add_flag("--offline", run_offline, "Replay cached LLM responses only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      RunConfig config = base_config(sample_config);
      const Scene scene = load_scene(sample_scene);
      Rng rng(derive_seed(sample_seed, "situations:" + scene.scene_id));
      const auto records =
          sample_situations(scene, sample_n, parse_types(sample_types), rng, HoiBank::bundled(), config, nullptr);
      config.seed = sample_seed;
      ensure_parent(sample_out);
      JsonlWriter out(sample_out, config.to_json());
      for (const auto& r : records) out.write(situation_record_to_json(r));
      out.close();
      std::cout << records.size() << " situations -> " << sample_out << '\n';
    } else if (*build) {
      const Scene scene = load_scene(build_scene);
      const RelationConfig relations = build_relations.empty() ? RelationConfig{} : RelationConfig::load(build_relations);
      fs::create_directories(build_out);
      std::size_t n = 0;
      read_jsonl(build_situations, [&](const json& value, std::size_t) {
        const auto record = situation_record_from_json(value);
        if (record.scene_id != scene.scene_id) {
          throw Error("situation " + record.situation_id + " belongs to scene " + record.scene_id);
        }
        const auto graph = build_situated_graph(scene, record.situation, relations, record.situation_id);
        write_json_file(fs::path(build_out) / graph_file_name(record.situation_id), graph_to_json(graph));
        ++n;
      });
      std::cout << n << " graphs -> " << build_out << '\n';
    } else if (*generate) {
      RunConfig config = base_config(gen_config);
      config.scenes_dir = gen_scenes;
      config.seed = gen_seed;
      config.mode = gen_mode == "llm" ? GenerationMode::llm : GenerationMode::templated;
      config.offline = gen_offline;
      config.workers = gen_workers;
      if (gen_per_scene >= 0) config.qa_per_scene = gen_per_scene;
      if (gen_situations >= 0) config.situations_per_scene = gen_situations;
      std::shared_ptr<ChatClient> llm;
      if (config.mode == GenerationMode::llm) llm = chat_client(gen_offline);
      const auto scenes = load_scene_pack(config.scenes_dir);
      const HoiBank bank = HoiBank::bundled();
      std::vector<QAPair> dataset;
      std::vector<SituatedGraph> graphs;
      for (const auto& scene : scenes) {
        Rng srng(derive_seed(config.seed, "situations:" + scene.scene_id));
        const auto situations =
            sample_situations(scene, config.situations_per_scene, config.situation_types, srng, bank, config, llm.get());
        std::vector<SituatedGraph> scene_graphs;
        for (const auto& s : situations) {
          scene_graphs.push_back(build_situated_graph(scene, s.situation, config.relations, s.situation_id));
        }
        Rng qrng(derive_seed(config.seed, "qa:" + scene.scene_id));
        auto qa = generate_for_scene(scene, scene_graphs, config, qrng, llm.get());
        std::move(qa.begin(), qa.end(), std::back_inserter(dataset));
        std::move(scene_graphs.begin(), scene_graphs.end(), std::back_inserter(graphs));
      }
      ensure_parent(gen_out);
      write_dataset(gen_out, dataset, config.to_json());
      const fs::path graph_dir = gen_graphs.empty() ? fs::path(gen_out).parent_path() / "graphs" : fs::path(gen_graphs);
      fs::create_directories(graph_dir);
      for (const auto& g : graphs) write_json_file(graph_dir / graph_file_name(g.situation_id), graph_to_json(g));
      std::cout << dataset.size() << " pairs -> " << gen_out << "; " << graphs.size() << " graphs -> "
                << graph_dir.string() << '\n';
    } else if (*refine) {
      auto batch = load_dataset(ref_in);
      const GraphIndex graphs = load_graph_dir(ref_graphs);
      auto [refined, report] = refine_batch(std::move(batch), graphs);
      if (!ref_no_balance) {
        Rng rng(derive_seed(ref_seed, "balance"));
        auto [balanced, balance_report] =
            balance_existence(std::move(refined), graphs, WildVocab::bundled(), rng, ref_tolerance);
        refined = std::move(balanced);
        report.merge(balance_report);
      }
      if (!ref_verdicts.empty()) {
        auto [reviewed, verdict_report] = apply_verdicts(std::move(refined), load_verdicts(ref_verdicts));
        refined = std::move(reviewed);
        report.merge(verdict_report);
      }
      json header = read_jsonl_header(ref_in).value_or(json::object());
      header.erase("kind");
      ensure_parent(ref_out);
      write_dataset(ref_out, refined, header);
      if (!ref_report.empty()) write_json_file(ref_report, report.to_json());
      std::cerr << report.summary() << '\n';
      std::cout << refined.size() << " pairs -> " << ref_out << '\n';
    } else if (*msnn) {
      RunConfig config = base_config(msnn_config);
      config.scenes_dir = msnn_scenes;
      config.seed = msnn_seed;
      if (msnn_per_scene >= 0) config.msnn_per_scene = msnn_per_scene;
      std::shared_ptr<ChatClient> llm;
      if (msnn_llm) llm = chat_client(msnn_offline);
      const auto scenes = load_scene_pack(config.scenes_dir);
      const HoiBank bank = HoiBank::bundled();
      std::vector<MsnnRecord> records;
      for (const auto& scene : scenes) {
        Rng rng(derive_seed(config.seed, "msnn:" + scene.scene_id));
        const MsnnGenerator generator(scene, config.msnn_config(), bank);
        std::size_t made = 0;
        for (int k = 0; k < config.msnn_per_scene; ++k) {
          auto record = generator.generate(rng, llm.get(), config.llm_model);
          if (!record) continue;
          record->record_id = scene.scene_id + ":m" + std::to_string(made++);
          records.push_back(std::move(*record));
        }
      }
      ensure_parent(msnn_out);
      write_msnn(msnn_out, records, config.to_json());
      std::cout << records.size() << " records -> " << msnn_out << '\n';
    } else if (*evaluate_cmd) {
      EvalOptions options;
      options.mode = *judge_mode_from_string(ev_judge);
      options.parallelism = ev_parallelism;
      options.em.containment_max_tokens = ev_containment;
      LlmSettings settings = LlmSettings::from_environment();
      options.judge_model = ev_model.empty() ? settings.model : ev_model;
      EvalReport report;
      if (!ev_dataset.empty() || !ev_preds.empty()) {
        if (ev_dataset.empty() || ev_preds.empty()) throw Error("--dataset and --preds go together");
        std::shared_ptr<ChatClient> judge;
        if (options.mode != JudgeMode::em) judge = make_chat_client(settings, ev_offline);
        report = evaluate(load_dataset(ev_dataset), load_predictions(ev_preds), options, judge.get());
      }
      if (!ev_msnn.empty() || !ev_msnn_preds.empty()) {
        if (ev_msnn.empty() || ev_msnn_preds.empty()) throw Error("--msnn and --msnn-preds go together");
        evaluate_msnn(report, load_msnn(ev_msnn), load_predictions(ev_msnn_preds));
      }
      if (ev_dataset.empty() && ev_msnn.empty()) throw Error("nothing to evaluate: pass --dataset/--preds or --msnn");
      if (ev_report.empty()) {
        std::cout << report.to_json().dump(2) << '\n';
      } else {
        write_json_file(ev_report, report.to_json());
        std::cout << "report -> " << ev_report << '\n';
      }
    } else if (*stats) {
      const auto report = stats_for_file(stats_dataset).to_json();
      if (stats_out.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        write_json_file(stats_out, report);
      }
    } else if (*verify) {
      const auto report = verify_file(
          verify_file_path, verify_scenes.empty() ? std::nullopt : std::optional<fs::path>(verify_scenes));
      for (const auto& p : report.problems) std::cerr << p << '\n';
      std::cout << report.kind << ": " << report.records << " records, " << report.problems.size() << " problems\n";
      return report.ok() ? 0 : 1;
    } else if (*serve) {
      if (!serve_dataset.empty()) serve_config.dataset = serve_dataset;
      if (!serve_verdicts.empty()) serve_config.verdicts = serve_verdicts;
      if (!serve_scenes.empty()) {
        serve_config.scenes_dir = serve_scenes;
      } else if (const auto header = read_jsonl_header(serve_config.dataset);
                 header && header->contains("scenes_dir") && !std::getenv("SITUGEN_DATA_DIR")) {
        serve_config.scenes_dir = header->at("scenes_dir").get<std::string>();
      }
      if (!serve_static.empty()) serve_config.static_dir = serve_static;
      std::tie(serve_config.host, serve_config.port) = parse_address(serve_addr);
      ReviewServer server(serve_config);
      const int port = server.bind(serve_config.host, serve_config.port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << server.store().items().size() << " items on http://" << serve_config.host << ':'
                << port << '\n';
      server.serve();
      g_server = nullptr;
    } else if (*run) {
      RunConfig config = base_config(run_config);
      if (!run_scenes.empty()) config.scenes_dir = run_scenes;
      if (!run_out.empty()) config.out_dir = run_out;
      if (run->count("--seed") > 0) config.seed = run_seed;
      if (run->count("--offline") > 0) config.offline = true;
      config.workers = run_workers;
      if (config.scenes_dir.empty()) throw Error("no scene pack: pass --scenes or set scenes_dir in the config");
      std::shared_ptr<ChatClient> llm;
      if (config.mode == GenerationMode::llm) llm = chat_client(config.offline);
      const RunResult result = run_pipeline(config, llm.get());
      write_run(result, config);
      std::cerr << result.refinement.summary() << '\n';
      std::cout << result.dataset.size() << " pairs, " << result.msnn.size() << " MSNN records -> "
                << config.out_dir.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "situgen: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
