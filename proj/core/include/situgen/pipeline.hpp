#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/graph.hpp"
#include "situgen/llm.hpp"
#include "situgen/msnn.hpp"
#include "situgen/qa.hpp"
#include "situgen/refinement.hpp"

namespace situgen {

enum class GenerationMode { templated, llm };

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path scenes_dir;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> relation_config_path;
  RelationConfig relations;
  SamplerConfig sampler;
  CategoryMix mix = CategoryMix::standard();
  std::vector<Interaction> situation_types{Interaction::standing, Interaction::sitting,
                                           Interaction::interact_large, Interaction::interact_small};
  int situations_per_scene = 4;
  int qa_per_scene = 60;
  int negatives_per_situation = 2;
  int msnn_per_scene = 8;
  int location_objects = 3;
  double goal_radius = 1.0;
  double balance_tolerance = 0.05;
  GenerationMode mode = GenerationMode::templated;
  std::string llm_model = "gpt-4o-mini";
  bool offline = true;
  int workers = 1;

  /// Everything except credentials; written as the header of every output file.
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; a relation_config_path is loaded.
  static RunConfig from_json(const nlohmann::json& value);
  static RunConfig load(const std::filesystem::path& path);

  MsnnConfig msnn_config() const;
};

struct SituationRecord {
  std::string situation_id;
  std::string scene_id;
  Situation situation;
};

nlohmann::json situation_record_to_json(const SituationRecord& record);
SituationRecord situation_record_from_json(const nlohmann::json& value);

/// `n` situations with ids `{scene_id}:s{i}`; types cycle through `types`,
/// falling through to the next type when the scene cannot host one. Action
/// and location texts are rendered.
std::vector<SituationRecord> sample_situations(const Scene& scene, int n, const std::vector<Interaction>& types,
                                               Rng& rng, const HoiBank& bank, const RunConfig& config,
                                               ChatClient* llm = nullptr);

/// QA pairs for the given graphs: the category schedule is dealt round-robin
/// over the graphs. Ids are `{situation_id}:q{i}`.
std::vector<QAPair> generate_for_scene(const Scene& scene, const std::vector<SituatedGraph>& graphs,
                                       const RunConfig& config, Rng& rng, ChatClient* llm = nullptr,
                                       const QaResources& resources = QaResources::bundled());

struct StatsReport {
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_category;
  std::map<std::string, std::size_t> per_provenance;
  std::size_t yes = 0;
  std::size_t no = 0;
  std::map<std::string, std::size_t> per_scene;
  std::map<std::string, std::size_t> situation_types;  // distinct situations
  double avg_question_tokens = 0.0;
  double avg_answer_tokens = 0.0;

  /// yes / (yes + no) over existence pairs; 0 when there are none.
  double yes_ratio() const;
  nlohmann::json to_json() const;

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

StatsReport compute_stats(const std::vector<QAPair>& dataset);
/// Errors carry the line number of a malformed record.
StatsReport stats_for_file(const std::filesystem::path& dataset);

std::vector<QAPair> load_dataset(const std::filesystem::path& path);
std::vector<MsnnRecord> load_msnn(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<QAPair>& dataset,
                   const nlohmann::json& header);
void write_msnn(const std::filesystem::path& path, const std::vector<MsnnRecord>& records,
                const nlohmann::json& header);

/// Every `*.json` graph in `dir`, keyed by situation id.
GraphIndex load_graph_dir(const std::filesystem::path& dir);
std::filesystem::path graph_file_name(const std::string& situation_id);

struct RunResult {
  std::vector<SituationRecord> situations;
  std::vector<SituatedGraph> graphs;
  std::vector<QAPair> dataset;
  std::vector<MsnnRecord> msnn;
  RefinementReport refinement;
  StatsReport stats;
};

/// sample -> graph -> generate -> refine -> balance -> MSNN -> stats, with a
/// worker pool over scenes. Output order and content depend only on the
/// config (and the replayed LLM responses). Stage failures raise StageError.
RunResult run_pipeline(const RunConfig& config, ChatClient* llm = nullptr);

/// dataset.jsonl, msnn.jsonl, graphs/, refinement_report.json and stats.json
/// under `config.out_dir`.
void write_run(const RunResult& result, const RunConfig& config);

struct VerifyReport {
  std::string kind;  // "dataset" or "msnn"
  std::size_t records = 0;
  std::vector<std::string> problems;

  bool ok() const { return problems.empty(); }
};

/// Re-derives every record of a pipeline output file from its scene: texts
/// must reference existing objects, graph-derived answers must match, MSNN
/// paths must be optimal and actions consistent. The run config comes from
/// the file header; `scenes_dir` overrides its scene directory.
VerifyReport verify_file(const std::filesystem::path& path,
                         const std::optional<std::filesystem::path>& scenes_dir = std::nullopt);

}  // namespace situgen
