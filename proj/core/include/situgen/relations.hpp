#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/scene.hpp"

namespace situgen {

/// Thresholds for every relation predicate. Loaded from a `relation_config`
/// JSON file; missing keys keep their defaults.
struct RelationConfig {
  double contact_tolerance = 0.05;     // |top(src) - bottom(dst)| for support
  double support_min_overlap = 0.5;    // fraction of the smaller footprint
  double inside_margin = 0.02;         // container inflation for inside
  double vertical_gap = 0.05;          // minimum gap for above/below
  double near_distance = 1.0;          // object-object, XY centroids
  double far_distance = 3.0;
  double between_distance = 0.3;       // to the segment b-c
  double between_min_span = 1.0;       // |b - c|
  double aligned_residual = 0.1;
  double proximity_pair_cutoff = 2.0;  // situated left/right/front/behind
  double agent_near = 1.5;             // agent-object bands
  double agent_middle = 3.0;

  static RelationConfig from_json(const nlohmann::json& value);
  static RelationConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

enum class RelationKind {
  support,
  inside,
  above,
  below,
  near,
  far,
  left,
  right,
  front,
  behind,
  between,
  aligned,
};

std::string_view to_string(RelationKind kind);
std::optional<RelationKind> relation_kind_from_string(std::string_view text);
bool is_situated(RelationKind kind);

/// Directed relation read as "src <kind> dst": support(table, book) means the
/// table supports the book, inside(box, toy) means the box contains the toy,
/// left(b, a) means b is to the left of a. `between` reads "src is between dst
/// and extra".
struct Edge {
  RelationKind kind = RelationKind::near;
  int src = 0;
  int dst = 0;
  std::optional<int> extra;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

enum class DistanceBand { near, middle, far };
enum class Direction { left, right, front, behind };

std::string_view to_string(DistanceBand band);
std::string_view to_string(Direction direction);
std::optional<DistanceBand> distance_band_from_string(std::string_view text);
std::optional<Direction> direction_from_string(std::string_view text);

struct AgentEdge {
  int object = 0;
  double distance_m = 0.0;
  double bearing = 0.0;  // radians, CCW positive, 0 = straight ahead
  DistanceBand band = DistanceBand::near;
  Direction coarse = Direction::front;
  int clock = 12;

  friend bool operator==(const AgentEdge&, const AgentEdge&) = default;
};

/// Clock hour for a bearing (radians, CCW positive, 0 ahead): 12 ahead,
/// 3 to the right, 9 to the left, with 30 degree bins centered on each hour.
int clock_direction(double bearing);

/// 90 degree sectors around the heading; the diagonals go to front/behind.
Direction coarse_direction(double bearing);

DistanceBand distance_band(double distance, const RelationConfig& config = {});

/// View-independent relations: support, inside, above/below, near/far,
/// between and aligned. Sorted, duplicate free.
std::vector<Edge> compute_static_relations(const Scene& scene, const RelationConfig& config = {});

/// Left/right/front/behind between object pairs as seen from `pose`. Sorted.
std::vector<Edge> situate_proximity(const Scene& scene, const Pose& pose,
                                    const RelationConfig& config = {});

/// One entry per object, in scene order.
std::vector<AgentEdge> compute_agent_edges(const Scene& scene, const Pose& pose,
                                           const RelationConfig& config = {});

}  // namespace situgen
