#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "random_scene.hpp"
#include "situgen/error.hpp"
#include "situgen/scene.hpp"
#include "test_util.hpp"

using namespace situgen;
using nlohmann::json;

namespace {

json minimal_scene() {
  return json::parse(R"({
    "scene_id": "s",
    "floor": {"polygon": [[0, 0], [4, 0], [4, 3], [0, 3]]},
    "objects": [
      {"id": 1, "label": "table", "centroid": [1, 1, 0.4], "size": [1, 0.6, 0.8], "yaw": 0},
      {"id": 2, "label": "chair", "centroid": [2, 1, 0.4], "size": [0.5, 0.5, 0.8], "yaw": 90,
       "front_normal": [0, 1], "flags": ["sittable"]}
    ]})");
}

std::string schema_field(const json& doc) {
  try {
    validate_scene(scene_from_json(doc));
  } catch (const SchemaError& e) {
    return e.field();
  }
  return "<valid>";
}

}  // namespace

TEST(Scene, FixturesLoadAndValidate) {
  const auto pack = load_scene_pack(test::scenes_dir());
  ASSERT_EQ(pack.size(), 5u);
  EXPECT_EQ(pack.front().scene_id, "bathroom_01");
  for (const auto& s : pack) {
    EXPECT_NO_THROW(validate_scene(s));
    EXPECT_GE(s.objects.size(), 10u);
  }
}

TEST(Scene, CanonicalRoundTripIsByteStable) {
  for (const auto& s : load_scene_pack(test::scenes_dir())) {
    const std::string once = canonical_scene_json(s);
    const Scene again = scene_from_json(json::parse(once));
    EXPECT_EQ(canonical_scene_json(again), once) << s.scene_id;
    EXPECT_EQ(again.objects.size(), s.objects.size());
  }
}

TEST(Scene, YawIsDegreesOnDisk) {
  const Scene s = scene_from_json(minimal_scene());
  EXPECT_NEAR(s.objects[1].yaw, kPi / 2, 1e-12);
  EXPECT_DOUBLE_EQ(scene_to_json(s)["objects"][1]["yaw"].get<double>(), 90.0);
}

TEST(Scene, ValidationNamesTheField) {
  EXPECT_EQ(schema_field(minimal_scene()), "<valid>");

  json dup = minimal_scene();
  dup["objects"][1]["id"] = 1;
  EXPECT_EQ(schema_field(dup), "objects");

  json label = minimal_scene();
  label["objects"][0]["label"] = "Table";
  EXPECT_EQ(schema_field(label), "objects[0].label");

  json size = minimal_scene();
  size["objects"][1]["size"][2] = 0.0;
  EXPECT_EQ(schema_field(size), "objects[1].size");

  json normal = minimal_scene();
  normal["objects"][1]["front_normal"] = {0.0, 2.0};
  EXPECT_EQ(schema_field(normal), "objects[1].front_normal");

  json cw = minimal_scene();
  cw["floor"]["polygon"] = {{0, 0}, {0, 3}, {4, 3}, {4, 0}};
  EXPECT_EQ(schema_field(cw), "floor.polygon");

  json far = minimal_scene();
  far["objects"][0]["centroid"] = {9.0, 1.0, 0.4};
  EXPECT_EQ(schema_field(far), "objects[0].centroid");

  json unknown = minimal_scene();
  unknown["colour"] = "red";
  EXPECT_THROW(scene_from_json(unknown), SchemaError);

  json missing = minimal_scene();
  missing.erase("floor");
  EXPECT_THROW(scene_from_json(missing), SchemaError);
}

TEST(Scene, DuplicateIdMessageListsIds) {
  json dup = minimal_scene();
  dup["objects"][1]["id"] = 1;
  try {
    validate_scene(scene_from_json(dup));
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate object id: 1"), std::string::npos);
  }
}

TEST(Scene, PackRejectsDuplicateSceneIds) {
  test::TempDir dir;
  const Scene s = scene_from_json(minimal_scene());
  save_scene(s, dir / "a.json");
  save_scene(s, dir / "b.json");
  EXPECT_THROW(load_scene_pack(dir.path()), Error);
}

TEST(Scene, RasterMatchesCellDefinition) {
  const Scene s = test::fixture_scene("office_01");
  const auto obstacles = navigation_obstacles(s);
  const OccupancyGrid grid = rasterize_floor(s.floor, obstacles, 0.1, 0.2);
  std::size_t passable = 0;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      const Vec2 p = grid.center({r, c});
      bool want = point_in_polygon(*s.floor.polygon, p);
      for (const auto& o : obstacles) {
        const Footprint f = o.footprint();
        if (f.contains(p) || f.distance(p) < 0.2) want = false;
      }
      EXPECT_EQ(grid.passable({r, c}), want) << r << "," << c;
      passable += want;
    }
  }
  EXPECT_GT(passable, 0u);
}

TEST(Scene, RasterIsMonotoneInClearance) {
  for (const auto& s : load_scene_pack(test::scenes_dir())) {
    const auto obstacles = navigation_obstacles(s);
    OccupancyGrid prev = rasterize_floor(s.floor, obstacles, 0.1, 0.0);
    for (const double clearance : {0.1, 0.2, 0.35, 0.5}) {
      const OccupancyGrid next = rasterize_floor(s.floor, obstacles, 0.1, clearance);
      ASSERT_EQ(next.cells.size(), prev.cells.size());
      for (std::size_t i = 0; i < next.cells.size(); ++i) {
        if (next.cells[i]) {
          EXPECT_TRUE(prev.cells[i]);
        }
      }
      EXPECT_LE(next.passable_count(), prev.passable_count());
      prev = next;
    }
  }
}

TEST(Scene, ObstaclesFollowHeightBand) {
  Scene s = scene_from_json(minimal_scene());
  s.objects[0].centroid.z = 2.5;  // hanging far above the walking band
  const auto obstacles = navigation_obstacles(s);
  ASSERT_EQ(obstacles.size(), 1u);
  EXPECT_EQ(obstacles[0].id, 2);
}

TEST(Scene, NormalizeIsAnIsometry) {
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const Scene s = test::random_scene(rng);
    const Pose pose = test::random_pose(s, rng);
    const Scene n = normalize_to_situation(s, pose);
    for (std::size_t a = 0; a < s.objects.size(); ++a) {
      const Vec2 agent = rotate(s.objects[a].centroid.xy() - pose.location.xy(), -pose.rotation);
      EXPECT_NEAR(n.objects[a].centroid.x, agent.x, 1e-9);
      EXPECT_NEAR(n.objects[a].centroid.y, agent.y, 1e-9);
      for (std::size_t b = 0; b < s.objects.size(); ++b) {
        EXPECT_NEAR(distance(n.objects[a].centroid.xy(), n.objects[b].centroid.xy()),
                    distance(s.objects[a].centroid.xy(), s.objects[b].centroid.xy()), 1e-9);
      }
    }
  }
}

TEST(Scene, TransformRoundTrip) {
  const Scene s = test::fixture_scene("bathroom_01");
  const Rigid2 m{0.7, {3.0, -2.0}};
  const Scene back = transform_scene(transform_scene(s, m), m.inverse());
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    EXPECT_NEAR(back.objects[i].centroid.x, s.objects[i].centroid.x, 1e-9);
    EXPECT_NEAR(back.objects[i].centroid.y, s.objects[i].centroid.y, 1e-9);
    EXPECT_NEAR(std::abs(wrap_pi(back.objects[i].yaw - s.objects[i].yaw)), 0.0, 1e-9);
  }
}
