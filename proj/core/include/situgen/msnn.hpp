#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/interleaved.hpp"
#include "situgen/rng.hpp"
#include "situgen/scene.hpp"
#include "situgen/situation.hpp"

namespace situgen {

class ChatClient;

enum class NavAction { move_forward, turn_left, move_backward, turn_right };

std::string_view to_string(NavAction action);
std::optional<NavAction> nav_action_from_string(std::string_view text);

struct PlanOptions {
  bool eight_connected = false;  // octile costs, no corner cutting
};

/// A* from `start` to the nearest cell of `goal_region`. Four-connected with
/// unit steps by default; ties broken by (f, h, row-major index). Throws
/// Error("goal unreachable") when no goal cell can be reached.
std::vector<Cell> plan_path(const OccupancyGrid& grid, Cell start, const std::vector<Cell>& goal_region,
                            const PlanOptions& options = {});

/// Passable cells whose centers lie within `radius` of the object's footprint.
std::vector<Cell> goal_region(const OccupancyGrid& grid, const ObjectInstance& goal, double radius);

/// Cell the agent starts from: its own cell when passable, otherwise the
/// nearest passable cell center (a seated agent is on top of an obstacle).
std::optional<Cell> start_cell(const OccupancyGrid& grid, Vec3 location);

/// Signed angle in degrees, (-180, 180], from `heading` (radians) to the step
/// `from -> to`; CCW positive, snapped to 1e-9 degrees.
double step_angle(double heading, Cell from, Cell to);

/// forward |t| < 45, left 45 <= t < 135, right -135 < t <= -45, backward otherwise.
NavAction action_for_angle(double theta_degrees);

/// Action for the first step of `path` given the start heading.
NavAction next_action(const std::vector<Cell>& path, const Situation& start);

struct NavGoal {
  int object_id = 0;
  InterleavedText text;

  friend bool operator==(const NavGoal&, const NavGoal&) = default;
};

struct MsnnRecord {
  std::string record_id;
  std::string scene_id;
  Situation start;
  NavGoal goal;
  std::vector<Cell> path;
  NavAction action = NavAction::move_forward;

  friend bool operator==(const MsnnRecord&, const MsnnRecord&) = default;
};

/// `{"record_id", "scene_id", "start": {...}, "goal": {"object_id", "text": [...]},
/// "path": [[r, c], ...], "action"}`.
nlohmann::json msnn_to_json(const MsnnRecord& record);
MsnnRecord msnn_from_json(const nlohmann::json& value);

struct MsnnConfig {
  SamplerConfig sampler;
  double goal_radius = 1.0;
  int max_attempts = 20;
  int location_objects = 3;  // objects named in the start location text
  PlanOptions plan;
  RelationConfig relations;
};

/// "I want to open the white <refrigerator-4-IMG>." from the object's HOI
/// templates; objects without templates get "I want to go to the ...".
InterleavedText goal_text(const Scene& scene, const ObjectInstance& obj, const HoiBank& bank, Rng& rng);

/// Draws MSNN records for one scene. Const methods are thread-safe when each
/// caller owns its Rng.
class MsnnGenerator {
 public:
  MsnnGenerator(const Scene& scene, MsnnConfig config, const HoiBank& bank);

  const OccupancyGrid& grid() const { return sampler_.grid(); }
  const MsnnConfig& config() const { return config_; }

  /// Objects a goal may be drawn from.
  std::vector<const ObjectInstance*> goal_candidates() const;

  /// Uniform interactable object plus goal sentence. With `llm`, the sentence
  /// comes from the chat endpoint. Throws when the scene has no interactable.
  NavGoal sample_goal(Rng& rng, ChatClient* llm = nullptr, const std::string& model = {},
                      std::optional<int> exclude = std::nullopt) const;

  /// Up to `max_attempts` tries over random start types and goals; nullopt
  /// when every try fails.
  std::optional<MsnnRecord> generate(Rng& rng, ChatClient* llm = nullptr, const std::string& model = {}) const;

  /// Problems with a stored record, empty when it is valid: start cell, path
  /// connectivity and passability, goal region, optimality and action.
  std::vector<std::string> check(const MsnnRecord& record) const;

 private:
  const Scene* scene_;
  MsnnConfig config_;
  HoiBank bank_;
  SituationSampler sampler_;
};

/// BFS shortest path length in steps (cells - 1), or nullopt if unreachable.
std::optional<int> bfs_distance(const OccupancyGrid& grid, Cell start, const std::vector<Cell>& goal_region);

}  // namespace situgen
