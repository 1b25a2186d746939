#include "situgen/scene.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"

namespace situgen {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kAttributeKeys = {
    "color", "shape3d", "material", "usage", "texture", "structure", "state"};
constexpr std::array<std::string_view, 7> kAttributePhrases = {
    "color", "3D shape", "material", "usage", "texture", "structure", "state"};

constexpr std::array<std::pair<std::string_view, ObjectFlag>, 3> kFlagNames = {{
    {"sittable", ObjectFlag::sittable},
    {"large_interactable", ObjectFlag::large_interactable},
    {"small_interactable", ObjectFlag::small_interactable},
}};

constexpr double kUnitTolerance = 1e-6;
constexpr double kYawEpsilon = 1e-6;

std::string at(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

std::string at(const std::string& base, std::size_t index) {
  return base + "[" + std::to_string(index) + "]";
}

double read_number(const json& v, const std::string& field) {
  if (!v.is_number()) {
    throw SchemaError(field, "expected a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw SchemaError(field, "must be finite");
  }
  return d;
}

Vec2 read_vec2(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2) {
    throw SchemaError(field, "expected [x, y]");
  }
  return {read_number(v[0], at(field, 0)), read_number(v[1], at(field, 1))};
}

Vec3 read_vec3(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 3) {
    throw SchemaError(field, "expected [x, y, z]");
  }
  return {read_number(v[0], at(field, 0)), read_number(v[1], at(field, 1)),
          read_number(v[2], at(field, 2))};
}

std::string read_string(const json& v, const std::string& field) {
  if (!v.is_string()) {
    throw SchemaError(field, "expected a string");
  }
  return v.get<std::string>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                         const std::string& field) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(at(field, key), "unknown field");
    }
  }
}

std::array<std::optional<std::string>, 7> read_attribute_map(const json& v, const std::string& field) {
  if (!v.is_object()) {
    throw SchemaError(field, "expected an object");
  }
  std::array<std::optional<std::string>, 7> out;
  for (const auto& [key, value] : v.items()) {
    const auto attribute = attribute_from_key(key);
    if (!attribute) {
      throw SchemaError(at(field, key), "not one of the seven attribute keys");
    }
    if (value.is_null()) {
      continue;
    }
    out[static_cast<std::size_t>(*attribute)] = read_string(value, at(field, key));
  }
  return out;
}

json write_attribute_map(const std::array<std::optional<std::string>, 7>& values) {
  json out = json::object();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) {
      out[std::string(kAttributeKeys[i])] = *values[i];
    }
  }
  return out;
}

bool is_unit(Vec2 v) { return std::abs(norm(v) - 1.0) <= kUnitTolerance; }

ObjectInstance object_from_json(const json& v, const std::string& field) {
  if (!v.is_object()) {
    throw SchemaError(field, "expected an object");
  }
  reject_unknown_keys(v,
                      {"id", "label", "centroid", "size", "yaw", "front_normal", "interactive_part",
                       "attributes", "descriptive_attributes", "image_ref", "flags"},
                      field);
  for (const char* required : {"id", "label", "centroid", "size"}) {
    if (!v.contains(required)) {
      throw SchemaError(at(field, required), "missing required field");
    }
  }
  ObjectInstance obj;
  if (!v["id"].is_number_integer()) {
    throw SchemaError(at(field, "id"), "expected an integer");
  }
  obj.id = v["id"].get<int>();
  obj.label = read_string(v["label"], at(field, "label"));
  obj.centroid = read_vec3(v["centroid"], at(field, "centroid"));
  obj.size = read_vec3(v["size"], at(field, "size"));
  if (v.contains("yaw")) {
    obj.yaw = file_radians(read_number(v["yaw"], at(field, "yaw")));
  }
  if (v.contains("front_normal") && !v["front_normal"].is_null()) {
    obj.front_normal = read_vec2(v["front_normal"], at(field, "front_normal"));
  }
  if (v.contains("interactive_part") && !v["interactive_part"].is_null()) {
    const json& part = v["interactive_part"];
    const std::string pf = at(field, "interactive_part");
    if (!part.is_object() || !part.contains("center") || !part.contains("normal")) {
      throw SchemaError(pf, "expected {\"center\": [x,y,z], \"normal\": [x,y]}");
    }
    reject_unknown_keys(part, {"center", "normal"}, pf);
    obj.interactive_part =
        InteractivePart{read_vec3(part["center"], at(pf, "center")), read_vec2(part["normal"], at(pf, "normal"))};
  }
  if (v.contains("attributes")) {
    obj.attributes.concise = read_attribute_map(v["attributes"], at(field, "attributes"));
  }
  if (v.contains("descriptive_attributes")) {
    obj.attributes.descriptive =
        read_attribute_map(v["descriptive_attributes"], at(field, "descriptive_attributes"));
  }
  if (v.contains("image_ref") && !v["image_ref"].is_null()) {
    obj.image_ref = read_string(v["image_ref"], at(field, "image_ref"));
  }
  if (v.contains("flags")) {
    const json& flags = v["flags"];
    if (!flags.is_array()) {
      throw SchemaError(at(field, "flags"), "expected an array of strings");
    }
    for (std::size_t i = 0; i < flags.size(); ++i) {
      const std::string name = read_string(flags[i], at(at(field, "flags"), i));
      const auto it = std::find_if(kFlagNames.begin(), kFlagNames.end(),
                                   [&](const auto& entry) { return entry.first == name; });
      if (it == kFlagNames.end()) {
        throw SchemaError(at(at(field, "flags"), i), "unknown flag '" + name + "'");
      }
      obj.set(it->second);
    }
  }
  return obj;
}

OccupancyGrid grid_from_json(const json& v, const std::string& field) {
  if (!v.is_object()) {
    throw SchemaError(field, "expected an object");
  }
  reject_unknown_keys(v, {"origin", "cell", "width", "height", "rows"}, field);
  for (const char* required : {"origin", "cell", "width", "height", "rows"}) {
    if (!v.contains(required)) {
      throw SchemaError(at(field, required), "missing required field");
    }
  }
  const Vec2 origin = read_vec2(v["origin"], at(field, "origin"));
  const double cell = read_number(v["cell"], at(field, "cell"));
  if (!(cell > 0.0)) {
    throw SchemaError(at(field, "cell"), "must be > 0");
  }
  if (!v["width"].is_number_integer() || !v["height"].is_number_integer()) {
    throw SchemaError(field, "width and height must be integers");
  }
  const int width = v["width"].get<int>();
  const int height = v["height"].get<int>();
  if (width <= 0 || height <= 0) {
    throw SchemaError(field, "width and height must be positive");
  }
  const json& rows = v["rows"];
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(height)) {
    throw SchemaError(at(field, "rows"), "expected `height` row strings");
  }
  OccupancyGrid grid(origin, cell, width, height);
  for (int r = 0; r < height; ++r) {
    const std::string row = read_string(rows[static_cast<std::size_t>(r)], at(at(field, "rows"), static_cast<std::size_t>(r)));
    if (row.size() != static_cast<std::size_t>(width)) {
      throw SchemaError(at(at(field, "rows"), static_cast<std::size_t>(r)), "row length must equal width");
    }
    for (int c = 0; c < width; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      if (ch != '0' && ch != '1') {
        throw SchemaError(at(at(field, "rows"), static_cast<std::size_t>(r)), "rows use '0' (blocked) and '1' (passable)");
      }
      grid.set({r, c}, ch == '1');
    }
  }
  return grid;
}

json grid_to_json(const OccupancyGrid& grid) {
  json rows = json::array();
  for (int r = 0; r < grid.height; ++r) {
    std::string row(static_cast<std::size_t>(grid.width), '0');
    for (int c = 0; c < grid.width; ++c) {
      if (grid.passable({r, c})) {
        row[static_cast<std::size_t>(c)] = '1';
      }
    }
    rows.push_back(std::move(row));
  }
  return {{"origin", {grid.origin.x, grid.origin.y}},
          {"cell", grid.cell},
          {"width", grid.width},
          {"height", grid.height},
          {"rows", std::move(rows)}};
}

}  // namespace

// --- enums ----------------------------------------------------------------

std::string_view to_string(SceneSource source) {
  switch (source) {
    case SceneSource::scannet: return "scannet";
    case SceneSource::rscan3: return "rscan3";
    case SceneSource::arkitscenes: return "arkitscenes";
    case SceneSource::synthetic: return "synthetic";
  }
  return "synthetic";
}

SceneSource scene_source_from_string(std::string_view text) {
  if (text == "scannet") return SceneSource::scannet;
  if (text == "rscan3") return SceneSource::rscan3;
  if (text == "arkitscenes") return SceneSource::arkitscenes;
  if (text == "synthetic") return SceneSource::synthetic;
  throw SchemaError("source", "unknown source '" + std::string(text) + "'");
}

std::string_view attribute_key(Attribute attribute) {
  return kAttributeKeys[static_cast<std::size_t>(attribute)];
}

std::string_view attribute_phrase(Attribute attribute) {
  return kAttributePhrases[static_cast<std::size_t>(attribute)];
}

std::optional<Attribute> attribute_from_key(std::string_view key) {
  for (std::size_t i = 0; i < kAttributeKeys.size(); ++i) {
    if (kAttributeKeys[i] == key) {
      return kAllAttributes[i];
    }
  }
  return std::nullopt;
}

bool AttributeRecord::empty() const {
  return std::none_of(concise.begin(), concise.end(), [](const auto& v) { return v.has_value(); }) &&
         std::none_of(descriptive.begin(), descriptive.end(), [](const auto& v) { return v.has_value(); });
}

// --- geometry --------------------------------------------------------------

Footprint ObjectInstance::footprint() const {
  const double y = std::abs(wrap_pi(yaw)) > kYawEpsilon ? yaw : 0.0;
  return {centroid.xy(), {0.5 * size.x, 0.5 * size.y}, y};
}

OccupancyGrid::OccupancyGrid(Vec2 origin_, double cell_, int width_, int height_)
    : origin(origin_),
      cell(cell_),
      width(width_),
      height(height_),
      cells(static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_), false) {}

std::optional<Cell> OccupancyGrid::locate(Vec2 p) const {
  const double fc = std::floor((p.x - origin.x) / cell);
  const double fr = std::floor((p.y - origin.y) / cell);
  if (fc < 0 || fr < 0 || fc >= width || fr >= height) {
    return std::nullopt;
  }
  return Cell{static_cast<int>(fr), static_cast<int>(fc)};
}

std::size_t OccupancyGrid::passable_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), true));
}

std::vector<Cell> OccupancyGrid::passable_cells() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i]) {
      out.push_back(cell_of(i));
    }
  }
  return out;
}

Rect FloorRegion::bounds() const {
  if (polygon) {
    return polygon_bounds(*polygon);
  }
  if (grid) {
    return grid->bounds();
  }
  return {};
}

bool FloorRegion::contains(Vec2 p) const {
  if (polygon) {
    return point_in_polygon(*polygon, p);
  }
  if (grid) {
    const auto c = grid->locate(p);
    return c && grid->passable(*c);
  }
  return false;
}

const ObjectInstance* Scene::find(int id) const {
  const auto it = std::find_if(objects.begin(), objects.end(), [id](const auto& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

// --- validation ------------------------------------------------------------

bool is_valid_label(std::string_view label) {
  if (label.empty() || label.front() < 'a' || label.front() > 'z') {
    return false;
  }
  return std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == ' ';
  });
}

void validate_scene(const Scene& scene) {
  if (scene.scene_id.empty()) {
    throw SchemaError("scene_id", "must be non-empty");
  }
  const FloorRegion& floor = scene.floor;
  if (floor.polygon.has_value() == floor.grid.has_value()) {
    throw SchemaError("floor", "exactly one of polygon or grid must be present");
  }
  if (floor.polygon) {
    const auto& poly = *floor.polygon;
    if (poly.size() < 3) {
      throw SchemaError("floor.polygon", "needs at least 3 vertices");
    }
    const double area = signed_area(poly);
    if (area == 0.0) {
      throw SchemaError("floor.polygon", "area must be > 0");
    }
    if (area < 0.0) {
      throw SchemaError("floor.polygon", "vertices must be counter-clockwise");
    }
    if (!polygon_is_simple(poly)) {
      throw SchemaError("floor.polygon", "must not self-intersect");
    }
  } else {
    const auto& grid = *floor.grid;
    if (!(grid.cell > 0.0)) {
      throw SchemaError("floor.grid.cell", "must be > 0");
    }
    if (static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height) != grid.cells.size()) {
      throw SchemaError("floor.grid", "width * height must equal the cell count");
    }
  }

  std::map<int, int> seen;
  for (const auto& obj : scene.objects) {
    ++seen[obj.id];
  }
  std::vector<int> duplicates;
  for (const auto& [id, count] : seen) {
    if (count > 1) {
      duplicates.push_back(id);
    }
  }
  if (!duplicates.empty()) {
    std::ostringstream msg;
    msg << (duplicates.size() == 1 ? "duplicate object id: " : "duplicate object ids: ");
    for (std::size_t i = 0; i < duplicates.size(); ++i) {
      msg << (i ? ", " : "") << duplicates[i];
    }
    throw SchemaError("objects", msg.str());
  }

  const Rect sanity = floor.bounds().inflated(1.0);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& obj = scene.objects[i];
    const std::string field = at("objects", i);
    if (obj.id < 0) {
      throw SchemaError(at(field, "id"), "must be >= 0");
    }
    if (!is_valid_label(obj.label)) {
      throw SchemaError(at(field, "label"), "'" + obj.label + "' does not match [a-z][a-z0-9_ ]*");
    }
    if (!(obj.size.x > 0.0 && obj.size.y > 0.0 && obj.size.z > 0.0)) {
      throw SchemaError(at(field, "size"), "components must be > 0");
    }
    if (obj.front_normal && !is_unit(*obj.front_normal)) {
      throw SchemaError(at(field, "front_normal"), "must have unit length");
    }
    if (obj.interactive_part && !is_unit(obj.interactive_part->normal)) {
      throw SchemaError(at(at(field, "interactive_part"), "normal"), "must have unit length");
    }
    if (!sanity.contains(obj.centroid.xy())) {
      throw SchemaError(at(field, "centroid"), "lies more than 1 m outside the floor bounds");
    }
  }
}

// --- IO ----------------------------------------------------------------------

Scene scene_from_json(const json& doc) {
  if (!doc.is_object()) {
    throw SchemaError("", "scene document must be a JSON object");
  }
  reject_unknown_keys(doc, {"scene_id", "source", "floor", "objects"}, "");
  for (const char* required : {"scene_id", "floor", "objects"}) {
    if (!doc.contains(required)) {
      throw SchemaError(required, "missing required field");
    }
  }
  Scene scene;
  scene.scene_id = read_string(doc["scene_id"], "scene_id");
  if (doc.contains("source")) {
    scene.source = scene_source_from_string(read_string(doc["source"], "source"));
  }
  const json& floor = doc["floor"];
  if (!floor.is_object()) {
    throw SchemaError("floor", "expected an object");
  }
  reject_unknown_keys(floor, {"polygon", "grid", "z"}, "floor");
  if (floor.contains("z")) {
    scene.floor.z = read_number(floor["z"], "floor.z");
  }
  if (floor.contains("polygon")) {
    const json& poly = floor["polygon"];
    if (!poly.is_array()) {
      throw SchemaError("floor.polygon", "expected an array of [x, y]");
    }
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      pts.push_back(read_vec2(poly[i], at("floor.polygon", i)));
    }
    scene.floor.polygon = std::move(pts);
  }
  if (floor.contains("grid")) {
    scene.floor.grid = grid_from_json(floor["grid"], "floor.grid");
  }
  const json& objects = doc["objects"];
  if (!objects.is_array()) {
    throw SchemaError("objects", "expected an array");
  }
  for (std::size_t i = 0; i < objects.size(); ++i) {
    scene.objects.push_back(object_from_json(objects[i], at("objects", i)));
  }
  validate_scene(scene);
  return scene;
}

json scene_to_json(const Scene& scene) {
  json floor = json::object();
  floor["z"] = scene.floor.z;
  if (scene.floor.polygon) {
    json poly = json::array();
    for (const Vec2 p : *scene.floor.polygon) {
      poly.push_back({p.x, p.y});
    }
    floor["polygon"] = std::move(poly);
  }
  if (scene.floor.grid) {
    floor["grid"] = grid_to_json(*scene.floor.grid);
  }
  json objects = json::array();
  for (const auto& obj : scene.objects) {
    json o = {{"id", obj.id},
              {"label", obj.label},
              {"centroid", {obj.centroid.x, obj.centroid.y, obj.centroid.z}},
              {"size", {obj.size.x, obj.size.y, obj.size.z}},
              {"yaw", file_degrees(obj.yaw)}};
    if (obj.front_normal) {
      o["front_normal"] = {obj.front_normal->x, obj.front_normal->y};
    }
    if (obj.interactive_part) {
      const auto& part = *obj.interactive_part;
      o["interactive_part"] = {{"center", {part.center.x, part.center.y, part.center.z}},
                               {"normal", {part.normal.x, part.normal.y}}};
    }
    if (json attrs = write_attribute_map(obj.attributes.concise); !attrs.empty()) {
      o["attributes"] = std::move(attrs);
    }
    if (json attrs = write_attribute_map(obj.attributes.descriptive); !attrs.empty()) {
      o["descriptive_attributes"] = std::move(attrs);
    }
    if (obj.image_ref) {
      o["image_ref"] = *obj.image_ref;
    }
    if (obj.flags != 0) {
      json flags = json::array();
      for (const auto& [name, flag] : kFlagNames) {
        if (obj.has(flag)) {
          flags.push_back(name);
        }
      }
      o["flags"] = std::move(flags);
    }
    objects.push_back(std::move(o));
  }
  return {{"scene_id", scene.scene_id},
          {"source", std::string(to_string(scene.source))},
          {"floor", std::move(floor)},
          {"objects", std::move(objects)}};
}

std::string canonical_scene_json(const Scene& scene) { return scene_to_json(scene).dump(2) + "\n"; }

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open scene file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("", path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return scene_from_json(doc);
  } catch (const SchemaError& e) {
    throw SchemaError(e.field(), path.filename().string() + ": " + std::string(e.what()));
  }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write scene file " + path.string());
  }
  out << canonical_scene_json(scene);
}

std::vector<Scene> load_scene_pack(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error("scene directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scene> scenes;
  std::set<std::string> ids;
  for (const auto& file : files) {
    Scene scene = load_scene(file);
    if (!ids.insert(scene.scene_id).second) {
      throw SchemaError("scene_id", "duplicate scene id '" + scene.scene_id + "' in " + dir.string());
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

// --- rasterization -----------------------------------------------------------

namespace {

OccupancyGrid floor_grid(const FloorRegion& region, double cell) {
  Rect b;
  if (region.polygon) {
    const auto& poly = *region.polygon;
    if (poly.size() < 3 || !(std::abs(signed_area(poly)) > 0.0)) {
      throw Error("degenerate floor polygon");
    }
    b = polygon_bounds(poly);
  } else if (region.grid) {
    b = region.grid->bounds();
  } else {
    throw Error("floor region has neither polygon nor grid");
  }
  const int width = std::max(1, static_cast<int>(std::ceil(b.width() / cell - 1e-9)));
  const int height = std::max(1, static_cast<int>(std::ceil(b.height() / cell - 1e-9)));
  OccupancyGrid grid(b.min, cell, width, height);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    grid.cells[i] = region.contains(grid.center(grid.cell_of(i)));
  }
  return grid;
}

}  // namespace

OccupancyGrid rasterize_floor(const FloorRegion& region, std::span<const ObjectInstance> obstacles,
                              double cell, double clearance) {
  if (!(cell > 0.0)) {
    throw Error("rasterize_floor: cell must be > 0");
  }
  if (!(clearance >= 0.0)) {
    throw Error("rasterize_floor: clearance must be >= 0");
  }
  OccupancyGrid grid = floor_grid(region, cell);
  for (const auto& obj : obstacles) {
    const Footprint fp = obj.footprint();
    const Rect reach = fp.bounds().inflated(clearance);
    const int c0 = std::max(0, static_cast<int>(std::floor((reach.min.x - grid.origin.x) / cell)) - 1);
    const int c1 = std::min(grid.width - 1, static_cast<int>(std::floor((reach.max.x - grid.origin.x) / cell)) + 1);
    const int r0 = std::max(0, static_cast<int>(std::floor((reach.min.y - grid.origin.y) / cell)) - 1);
    const int r1 = std::min(grid.height - 1, static_cast<int>(std::floor((reach.max.y - grid.origin.y) / cell)) + 1);
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const Cell at_cell{r, c};
        if (!grid.passable(at_cell)) {
          continue;
        }
        const Vec2 p = grid.center(at_cell);
        if (fp.contains(p) || fp.distance(p) < clearance) {
          grid.set(at_cell, false);
        }
      }
    }
  }
  return grid;
}

std::vector<ObjectInstance> navigation_obstacles(const Scene& scene, const RasterConfig& config) {
  std::vector<ObjectInstance> out;
  const double lo = scene.floor.z + config.obstacle_min_height;
  const double hi = scene.floor.z + config.obstacle_max_height;
  for (const auto& obj : scene.objects) {
    if (obj.top() > lo && obj.bottom() < hi) {
      out.push_back(obj);
    }
  }
  return out;
}

OccupancyGrid navigation_grid(const Scene& scene, const RasterConfig& config) {
  const auto obstacles = navigation_obstacles(scene, config);
  return rasterize_floor(scene.floor, obstacles, config.cell, config.clearance);
}

// --- rigid motions -----------------------------------------------------------

Rigid2 world_to_agent(const Pose& pose) {
  const double angle = -pose.rotation;
  return {angle, rotate(-pose.location.xy(), angle)};
}

namespace {

OccupancyGrid transform_grid(const OccupancyGrid& src, const Rigid2& motion) {
  const Rect b = src.bounds();
  const std::array<Vec2, 4> corners = {b.min, Vec2{b.max.x, b.min.y}, b.max, Vec2{b.min.x, b.max.y}};
  std::vector<Vec2> moved;
  for (const Vec2 c : corners) {
    moved.push_back(motion.apply(c));
  }
  const Rect nb = polygon_bounds(moved);
  const int width = std::max(1, static_cast<int>(std::ceil(nb.width() / src.cell - 1e-9)));
  const int height = std::max(1, static_cast<int>(std::ceil(nb.height() / src.cell - 1e-9)));
  OccupancyGrid out(nb.min, src.cell, width, height);
  const Rigid2 back = motion.inverse();
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    const auto c = src.locate(back.apply(out.center(out.cell_of(i))));
    out.cells[i] = c && src.passable(*c);
  }
  return out;
}

}  // namespace

Scene transform_scene(const Scene& scene, const Rigid2& motion, double dz) {
  Scene out = scene;
  for (auto& obj : out.objects) {
    const Vec2 c = motion.apply(obj.centroid.xy());
    obj.centroid = {c.x, c.y, obj.centroid.z + dz};
    obj.yaw = wrap_two_pi(obj.yaw + motion.angle);
    if (obj.front_normal) {
      obj.front_normal = motion.apply_direction(*obj.front_normal);
    }
    if (obj.interactive_part) {
      auto& part = *obj.interactive_part;
      const Vec2 pc = motion.apply(part.center.xy());
      part.center = {pc.x, pc.y, part.center.z + dz};
      part.normal = motion.apply_direction(part.normal);
    }
  }
  out.floor.z += dz;
  if (out.floor.polygon) {
    for (Vec2& p : *out.floor.polygon) {
      p = motion.apply(p);
    }
  }
  if (out.floor.grid) {
    out.floor.grid = transform_grid(*out.floor.grid, motion);
  }
  return out;
}

Scene normalize_to_situation(const Scene& scene, const Pose& pose) {
  return transform_scene(scene, world_to_agent(pose), -pose.location.z);
}

}  // namespace situgen
