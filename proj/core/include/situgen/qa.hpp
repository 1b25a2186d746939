#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/graph.hpp"
#include "situgen/interleaved.hpp"
#include "situgen/llm.hpp"
#include "situgen/rng.hpp"
#include "situgen/situation.hpp"

namespace situgen {

enum class Category {
  counting,
  existence,
  attribute,
  description,
  spatial,
  navigation,
  refer,
  room_type,
  affordance,
};

inline constexpr std::array<Category, 9> kAllCategories = {
    Category::counting, Category::existence,  Category::attribute, Category::description, Category::spatial,
    Category::navigation, Category::refer,    Category::room_type, Category::affordance};

std::string_view to_string(Category category);
std::optional<Category> category_from_string(std::string_view text);

enum class Provenance { templated, llm, augmented };

std::string_view to_string(Provenance provenance);
std::optional<Provenance> provenance_from_string(std::string_view text);

struct QAPair {
  std::string qa_id;
  std::string scene_id;
  std::string situation_id;
  Situation situation;
  InterleavedText question;
  std::string answer;
  Category category = Category::counting;
  Provenance provenance = Provenance::templated;
  std::map<std::string, std::string> meta;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

/// Dataset record: `{"qa_id", "scene_id", "situation_id", "situation": {...},
/// "question": [segments], "answer", "category", "provenance", "meta"}`.
nlohmann::json qa_to_json(const QAPair& qa);
QAPair qa_from_json(const nlohmann::json& value);

// --- bundled resources ------------------------------------------------------------

/// Object labels that do not occur indoors, used for verified "no" answers.
struct WildVocab {
  std::vector<std::string> labels;

  static WildVocab bundled();
  static WildVocab load(const std::filesystem::path& path);
  bool contains(std::string_view label) const;
};

struct RoomRule {
  std::string room;
  std::vector<std::string> labels;
};

struct AffordanceRule {
  std::string purpose;  // completes "Which object can I use to ...?"
  std::vector<std::string> labels;
};

struct SeedExample {
  std::string graph_snippet;
  std::string question;
  std::string answer;
  Category category = Category::counting;
};

struct QaResources {
  std::vector<RoomRule> room_rules;
  std::vector<AffordanceRule> affordances;
  std::vector<std::string> colors;
  std::vector<SeedExample> seeds;
  WildVocab wild;

  static const QaResources& bundled();
  bool is_color(std::string_view word) const;
};

// --- question grammar -----------------------------------------------------------

enum class RegionKind { room, direction, clock };

struct Region {
  RegionKind kind = RegionKind::room;
  Direction direction = Direction::front;
  int clock = 12;

  friend bool operator==(const Region&, const Region&) = default;
};

/// "<color> <label> <region>": the predicate behind counting and existence
/// questions and referring descriptions.
struct ObjectQuery {
  std::string label;
  std::optional<std::string> color;
  Region region;
  bool label_in_graph = true;

  friend bool operator==(const ObjectQuery&, const ObjectQuery&) = default;
};

/// "in the room", "on my left", "in front of me", "at my 3 o'clock", ...
std::string region_phrase(const Region& region);

/// Nodes satisfying the query, or nullopt when a candidate's color is unknown.
/// Directional regions skip the situation's anchor object.
std::optional<std::vector<int>> match_query(const ObjectQuery& query, const SituatedGraph& graph);

std::string render_counting_question(const ObjectQuery& query);
std::string render_existence_question(const ObjectQuery& query, bool can_i_find = false);

std::optional<ObjectQuery> parse_counting_question(std::string_view question, const SituatedGraph& graph,
                                                   const QaResources& resources = QaResources::bundled());
std::optional<ObjectQuery> parse_existence_question(std::string_view question, const SituatedGraph& graph,
                                                    const QaResources& resources = QaResources::bundled());

/// "4", "four", "two tables", "There are 3 chairs." -> number.
std::optional<int> parse_count_answer(std::string_view answer);
/// Leading yes/no (after normalization).
std::optional<bool> parse_yes_no(std::string_view answer);

/// Answer implied by the graph for a question written in this engine's
/// grammar; nullopt when the question does not parse or is unanswerable.
std::optional<std::string> expected_answer(const InterleavedText& question, Category category,
                                           const SituatedGraph& graph,
                                           const QaResources& resources = QaResources::bundled());

// --- generation ------------------------------------------------------------------

/// Share of each category in a generation run (weights, normalized on use).
struct CategoryMix {
  std::array<double, 9> weights{};

  /// counting 15, existence 20, spatial 20, refer 15, navigation 10,
  /// attribute 8, description 5, room_type 4, affordance 3.
  static CategoryMix standard();
  static CategoryMix from_json(const nlohmann::json& value);
  nlohmann::json to_json() const;
  double weight(Category c) const { return weights[static_cast<std::size_t>(c)]; }
};

/// Exactly `n` category slots, interleaved; each category's count is within
/// 1 of n * share.
std::vector<Category> schedule_categories(const CategoryMix& mix, int n);

/// Up to `n` distinct pairs of one category whose answers are read off the graph.
std::vector<QAPair> generate_templated(const SituatedGraph& graph, Category category, Rng& rng, int n,
                                       const QaResources& resources = QaResources::bundled());

/// Verified "no" existence questions from wild labels and from in-scene
/// labels under an unsatisfied direction or color.
std::vector<QAPair> augment_negative_existence(const Scene& scene, const SituatedGraph& graph,
                                               const WildVocab& vocab, Rng& rng, int n,
                                               const QaResources& resources = QaResources::bundled());

// --- LLM prompts -----------------------------------------------------------------

struct PromptBundle {
  std::string system;
  std::string graph_serialization;
  std::vector<SeedExample> seed_examples;
  std::string instructions;
  std::vector<std::string> image_urls;  // vision prompts only

  /// Full user message: graph, examples, instructions.
  std::string user_message() const;
  ChatRequest to_chat_request(const std::string& model) const;
};

struct QaPromptConfig {
  int examples_per_prompt = 3;
  std::size_t combination_index = 0;
  std::size_t max_prompt_tokens = 6000;  // estimated as ceil(chars / 4)
};

/// One `label-id: [x, y, z], [h, w, d], color, 3D shape, ...;` line per node,
/// then relations and the situation.
std::string serialize_graph(const SituatedGraph& graph);

/// Prompt asking for typed QA pairs about the graph; shrinks the visible
/// radius until the prompt fits the token budget.
PromptBundle build_qa_prompt(const SituatedGraph& graph, const std::vector<SeedExample>& seeds,
                             const QaPromptConfig& config = {});

std::size_t estimate_tokens(std::string_view text);

struct LlmParseResult {
  struct Rejection {
    std::size_t record = 0;
    std::string reason;
  };

  std::vector<QAPair> pairs;
  std::vector<Rejection> rejected;
  std::size_t malformed = 0;
};

/// Extracts `Question:` / `Type:` / `Answer:` records. Throws when nothing parses.
LlmParseResult parse_llm_output(std::string_view text);

/// Vision prompt asking for short and long descriptions of the seven
/// attributes. `obj.image_ref` must name a readable image file.
PromptBundle build_attribute_prompt(const ObjectInstance& obj,
                                    const std::filesystem::path& image_root = {});

struct AttributeParse {
  AttributeRecord record;
  std::vector<std::string> warnings;
};

/// Accepts JSON or Python-dict replies; missing keys stay absent.
AttributeParse parse_attribute_response(std::string_view raw);

}  // namespace situgen
