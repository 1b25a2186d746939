#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/geometry.hpp"

namespace situgen {

enum class SceneSource { scannet, rscan3, arkitscenes, synthetic };

std::string_view to_string(SceneSource source);
SceneSource scene_source_from_string(std::string_view text);

/// The seven object attributes, in serialization order.
enum class Attribute { color, shape3d, material, usage, texture, structure, state };

inline constexpr std::array<Attribute, 7> kAllAttributes = {
    Attribute::color,   Attribute::shape3d,   Attribute::material, Attribute::usage,
    Attribute::texture, Attribute::structure, Attribute::state};

/// JSON key of an attribute ("color", "shape3d", ...).
std::string_view attribute_key(Attribute attribute);
/// Human wording used in questions and prompts ("color", "3D shape", ...).
std::string_view attribute_phrase(Attribute attribute);
std::optional<Attribute> attribute_from_key(std::string_view key);

struct AttributeRecord {
  std::array<std::optional<std::string>, 7> concise;
  std::array<std::optional<std::string>, 7> descriptive;

  const std::optional<std::string>& get(Attribute a) const {
    return concise[static_cast<std::size_t>(a)];
  }
  std::optional<std::string>& get(Attribute a) { return concise[static_cast<std::size_t>(a)]; }
  const std::optional<std::string>& get_descriptive(Attribute a) const {
    return descriptive[static_cast<std::size_t>(a)];
  }
  std::optional<std::string>& get_descriptive(Attribute a) {
    return descriptive[static_cast<std::size_t>(a)];
  }
  bool empty() const;

  friend bool operator==(const AttributeRecord&, const AttributeRecord&) = default;
};

enum class ObjectFlag : std::uint8_t {
  sittable = 1U << 0U,
  large_interactable = 1U << 1U,
  small_interactable = 1U << 2U,
};

struct InteractivePart {
  Vec3 center{};
  Vec2 normal{};

  friend bool operator==(const InteractivePart&, const InteractivePart&) = default;
};

struct ObjectInstance {
  int id = 0;
  std::string label;
  Vec3 centroid{};
  Vec3 size{};
  double yaw = 0.0;  // radians in [0, 2pi)
  std::optional<Vec2> front_normal;
  std::optional<InteractivePart> interactive_part;
  AttributeRecord attributes;
  std::optional<std::string> image_ref;
  std::uint8_t flags = 0;

  bool has(ObjectFlag flag) const { return (flags & static_cast<std::uint8_t>(flag)) != 0; }
  void set(ObjectFlag flag) { flags |= static_cast<std::uint8_t>(flag); }

  double bottom() const { return centroid.z - 0.5 * size.z; }
  double top() const { return centroid.z + 0.5 * size.z; }
  double volume() const { return size.x * size.y * size.z; }

  /// XY footprint. Yaw is honored only when |yaw| > 1e-6 (mod 2pi).
  Footprint footprint() const;

  /// Axis-aligned XY bounds of the footprint.
  Rect footprint_bounds() const { return footprint().bounds(); }

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Cell {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Regular passability grid over the floor; rows advance along +y, columns
/// along +x, cell (0,0) has its lower-left corner at `origin`.
struct OccupancyGrid {
  Vec2 origin{};
  double cell = 0.10;
  int width = 0;
  int height = 0;
  std::vector<bool> cells;  // row-major, true = passable

  OccupancyGrid() = default;
  OccupancyGrid(Vec2 origin_, double cell_, int width_, int height_);

  bool in_bounds(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_of(std::size_t index) const {
    return {static_cast<int>(index / static_cast<std::size_t>(width)),
            static_cast<int>(index % static_cast<std::size_t>(width))};
  }
  bool passable(Cell c) const { return in_bounds(c) && cells[index(c)]; }
  void set(Cell c, bool value) { cells[index(c)] = value; }

  Vec2 center(Cell c) const {
    return {origin.x + (c.col + 0.5) * cell, origin.y + (c.row + 0.5) * cell};
  }
  /// Cell containing `p`, if inside the grid extent.
  std::optional<Cell> locate(Vec2 p) const;
  Rect bounds() const {
    return {origin, {origin.x + width * cell, origin.y + height * cell}};
  }

  std::size_t passable_count() const;
  std::vector<Cell> passable_cells() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

struct FloorRegion {
  std::optional<std::vector<Vec2>> polygon;
  std::optional<OccupancyGrid> grid;
  double z = 0.0;

  Rect bounds() const;
  /// True when `p` lies on the floor (inside the polygon, or on a passable grid cell).
  bool contains(Vec2 p) const;

  friend bool operator==(const FloorRegion&, const FloorRegion&) = default;
};

struct Scene {
  std::string scene_id;
  SceneSource source = SceneSource::synthetic;
  FloorRegion floor;
  std::vector<ObjectInstance> objects;

  const ObjectInstance* find(int id) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Agent pose: location in meters and heading in radians (CCW from +x).
struct Pose {
  Vec3 location{};
  double rotation = 0.0;
};

// --- IO -------------------------------------------------------------------

Scene scene_from_json(const nlohmann::json& doc);
nlohmann::json scene_to_json(const Scene& scene);
Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);
/// Canonical serialized form: sorted keys, two-space indent, trailing newline.
std::string canonical_scene_json(const Scene& scene);

/// Loads every `*.json` file in `dir`, sorted by file name. Scene ids must be
/// unique within the pack.
std::vector<Scene> load_scene_pack(const std::filesystem::path& dir);

/// Throws SchemaError naming the first violated invariant.
void validate_scene(const Scene& scene);

bool is_valid_label(std::string_view label);

// --- geometry over scenes -------------------------------------------------

struct RasterConfig {
  double cell = 0.10;
  double clearance = 0.20;
  /// Objects whose vertical extent overlaps [floor + min, floor + max] block walking.
  double obstacle_min_height = 0.05;
  double obstacle_max_height = 1.80;
};

/// Cell is passable iff its center lies on the floor, outside every obstacle
/// footprint and at least `clearance` away from it.
OccupancyGrid rasterize_floor(const FloorRegion& region, std::span<const ObjectInstance> obstacles,
                              double cell, double clearance);

/// Objects that block walking: those whose vertical extent reaches into the
/// band an upright agent occupies. Sittable objects are included.
std::vector<ObjectInstance> navigation_obstacles(const Scene& scene, const RasterConfig& config = {});

/// Passability grid for walking agents in `scene`.
OccupancyGrid navigation_grid(const Scene& scene, const RasterConfig& config = {});

/// World-to-agent rigid motion for `pose`.
Rigid2 world_to_agent(const Pose& pose);

/// Expresses the whole scene in the agent frame: the agent stands at the
/// origin facing +x. Heights are shifted by the agent's z.
Scene normalize_to_situation(const Scene& scene, const Pose& pose);

/// Applies an arbitrary rigid motion to every geometric quantity in the scene.
Scene transform_scene(const Scene& scene, const Rigid2& motion, double dz = 0.0);

}  // namespace situgen
