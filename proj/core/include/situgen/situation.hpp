#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/interleaved.hpp"
#include "situgen/relations.hpp"
#include "situgen/rng.hpp"
#include "situgen/scene.hpp"

namespace situgen {

class ChatClient;

enum class Interaction { standing, sitting, interact_large, interact_small };

inline constexpr std::array<Interaction, 4> kAllInteractions = {
    Interaction::standing, Interaction::sitting, Interaction::interact_large, Interaction::interact_small};

std::string_view to_string(Interaction interaction);
std::optional<Interaction> interaction_from_string(std::string_view text);

struct Situation {
  Vec3 location{};
  double rotation = 0.0;  // radians in [0, 2pi)
  Interaction interaction = Interaction::standing;
  std::optional<int> anchor_object;
  InterleavedText action_text;
  InterleavedText location_text;

  Pose pose() const { return {location, rotation}; }

  friend bool operator==(const Situation&, const Situation&) = default;
};

/// Wire form: `{"loc": [x,y,z], "rot_deg", "interaction", "anchor_object",
/// "action_text": [...], "location_text": [...]}`.
nlohmann::json situation_to_json(const Situation& s);
Situation situation_from_json(const nlohmann::json& value);

/// Snaps the rotation to its serialized value so downstream computations see
/// exactly what a reader of the output file will see.
Situation canonicalized(Situation s);

/// Per-label interaction sentences. Each template holds exactly one slot of
/// the form `<label-<ID>-IMG>`, e.g. "I am opening the <door-<ID>-IMG>.".
class HoiBank {
 public:
  HoiBank() = default;

  static HoiBank from_json(const nlohmann::json& value);
  static HoiBank load(const std::filesystem::path& path);
  /// The bank shipped with the library.
  static HoiBank bundled();

  /// Throws if `sentence` does not contain exactly one slot.
  void add(const std::string& label, const std::string& sentence);

  const std::vector<std::string>* find(std::string_view label) const;
  std::size_t label_count() const { return templates_.size(); }
  std::size_t template_count() const;
  const std::map<std::string, std::vector<std::string>, std::less<>>& templates() const { return templates_; }

  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> templates_;
};

/// Number of `<label-<ID>-IMG>` slots in a template.
std::size_t count_template_slots(std::string_view sentence);

struct SamplerConfig {
  RasterConfig raster;
  double interaction_radius = 1.0;
  double seat_shrink = 0.2;               // seat rectangle shrinks 20% toward its center
  double large_volume_threshold = 0.3;    // m^3, for packs without interaction flags
};

/// Draws agent situations for one scene. Holds the scene by reference and
/// the walking grid by value; const methods are safe to share across threads
/// as long as each caller owns its Rng.
class SituationSampler {
 public:
  explicit SituationSampler(const Scene& scene, SamplerConfig config = {});

  const Scene& scene() const { return *scene_; }
  const OccupancyGrid& grid() const { return grid_; }
  const SamplerConfig& config() const { return config_; }

  Situation standing(Rng& rng) const;
  Situation sitting(Rng& rng) const;
  Situation interact_large(const ObjectInstance& obj, Rng& rng) const;
  Situation interact_small(const ObjectInstance& obj, Rng& rng) const;

  /// Samples `interaction`, picking the anchor object uniformly among the
  /// candidates that admit a valid situation.
  Situation sample(Interaction interaction, Rng& rng) const;

  bool is_large_interactable(const ObjectInstance& obj) const;
  bool is_small_interactable(const ObjectInstance& obj) const;
  std::vector<const ObjectInstance*> sittable_objects() const;
  std::vector<const ObjectInstance*> large_interactables() const;
  std::vector<const ObjectInstance*> small_interactables() const;

  /// Passable cells an agent may stand on to interact with `obj`.
  std::vector<Cell> large_interaction_cells(const ObjectInstance& obj) const;
  std::vector<Cell> small_interaction_cells(const ObjectInstance& obj) const;

 private:
  const Scene* scene_;
  SamplerConfig config_;
  OccupancyGrid grid_;
  bool has_interaction_flags_ = false;
};

Situation sample_standing(const Scene& scene, Rng& rng, const SamplerConfig& config = {});
Situation sample_sitting(const Scene& scene, Rng& rng, const SamplerConfig& config = {});
Situation sample_interact_large(const Scene& scene, const ObjectInstance& obj, Rng& rng,
                                const SamplerConfig& config = {});
Situation sample_interact_small(const Scene& scene, const ObjectInstance& obj, Rng& rng,
                                const SamplerConfig& config = {});

/// One sentence describing what the agent is doing.
InterleavedText render_action_description(const Situation& s, const Scene& scene, const HoiBank& bank,
                                          Rng& rng);

/// Describes the `k` nearest objects (anchor excluded) by distance band and
/// clock direction. With `llm`, the same relations are sent to the chat
/// endpoint and the reply is interleaved against the scene.
InterleavedText render_location_description(const Scene& scene, const Situation& s, int k,
                                            ChatClient* llm = nullptr,
                                            const RelationConfig& config = {},
                                            const std::string& model = {});

/// Sentence used for an object in a location description.
std::string band_phrase(DistanceBand band);

}  // namespace situgen
