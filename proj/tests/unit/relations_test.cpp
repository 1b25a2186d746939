#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "oracle.hpp"
#include "random_scene.hpp"
#include "situgen/error.hpp"
#include "situgen/relations.hpp"
#include "test_util.hpp"

using namespace situgen;
using nlohmann::json;

namespace {

ObjectInstance box(int id, std::string label, Vec3 c, Vec3 size) {
  ObjectInstance o;
  o.id = id;
  o.label = std::move(label);
  o.centroid = c;
  o.size = size;
  return o;
}

Scene scene_of(std::vector<ObjectInstance> objs) {
  Scene s;
  s.scene_id = "t";
  s.floor.polygon = std::vector<Vec2>{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
  s.objects = std::move(objs);
  return s;
}

bool has(const std::vector<Edge>& edges, RelationKind k, int src, int dst, std::optional<int> extra = std::nullopt) {
  return std::find(edges.begin(), edges.end(), Edge{k, src, dst, extra}) != edges.end();
}

}  // namespace

TEST(Relations, HandBuiltScene) {
  const Scene s = scene_of({
      box(1, "table", {2, 2, 0.4}, {1.2, 0.8, 0.8}),
      box(2, "cup", {2.1, 2.0, 0.85}, {0.1, 0.1, 0.1}),    // resting on the table
      box(3, "lamp", {2.0, 2.0, 2.0}, {0.3, 0.3, 0.2}),    // hanging above
      box(4, "shelf", {6, 2, 1.0}, {1.0, 0.5, 2.0}),
      box(5, "book", {6, 2, 1.0}, {0.2, 0.2, 0.3}),        // inside the shelf
      box(6, "chair", {4, 2, 0.4}, {0.4, 0.4, 0.8}),       // between table and shelf
  });
  const auto e = compute_static_relations(s);
  EXPECT_TRUE(has(e, RelationKind::support, 1, 2));
  EXPECT_FALSE(has(e, RelationKind::support, 2, 1));
  EXPECT_TRUE(has(e, RelationKind::above, 3, 1));
  EXPECT_TRUE(has(e, RelationKind::below, 1, 3));
  EXPECT_TRUE(has(e, RelationKind::inside, 4, 5));
  EXPECT_TRUE(has(e, RelationKind::near, 1, 2));
  EXPECT_TRUE(has(e, RelationKind::far, 1, 4));
  EXPECT_TRUE(has(e, RelationKind::between, 6, 1, 4));
  EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
  EXPECT_EQ(std::adjacent_find(e.begin(), e.end()), e.end());
  for (const auto& edge : e) EXPECT_FALSE(is_situated(edge.kind));
}

TEST(Relations, AlignedNeedsSameLabelAndCollinearity) {
  const Scene s = scene_of({box(1, "chair", {1, 1, 0.4}, {0.4, 0.4, 0.8}), box(2, "chair", {2, 1.05, 0.4}, {0.4, 0.4, 0.8}),
                            box(3, "chair", {3, 1, 0.4}, {0.4, 0.4, 0.8}), box(4, "table", {4, 1, 0.4}, {0.4, 0.4, 0.8})});
  const auto e = compute_static_relations(s);
  for (const int a : {1, 2, 3}) {
    for (const int b : {1, 2, 3}) {
      if (a != b) {
        EXPECT_TRUE(has(e, RelationKind::aligned, a, b));
      }
    }
    EXPECT_FALSE(has(e, RelationKind::aligned, a, 4));
  }
  Scene bent = s;
  bent.objects[1].centroid.y = 1.5;
  EXPECT_FALSE(has(compute_static_relations(bent), RelationKind::aligned, 1, 3));
}

TEST(Relations, ProximityReadsInAgentFrame) {
  const Scene s = scene_of({box(1, "table", {2, 2, 0.4}, {1, 1, 0.8}), box(2, "chair", {2, 3, 0.4}, {0.4, 0.4, 0.8})});
  // facing +x, the chair (+y of the table) is on the left
  auto e = situate_proximity(s, Pose{{0, 0, 0}, 0.0});
  EXPECT_TRUE(has(e, RelationKind::left, 2, 1));
  EXPECT_TRUE(has(e, RelationKind::right, 1, 2));
  // facing +y it is in front
  e = situate_proximity(s, Pose{{0, 0, 0}, kPi / 2});
  EXPECT_TRUE(has(e, RelationKind::front, 2, 1));
  EXPECT_TRUE(has(e, RelationKind::behind, 1, 2));
  for (const auto& edge : e) EXPECT_TRUE(is_situated(edge.kind));
}

TEST(Relations, ProximityCutoff) {
  const Scene s = scene_of({box(1, "table", {2, 2, 0.4}, {1, 1, 0.8}), box(2, "chair", {2, 4.5, 0.4}, {0.4, 0.4, 0.8})});
  EXPECT_TRUE(situate_proximity(s, Pose{}).empty());
  RelationConfig c;
  c.proximity_pair_cutoff = 3.0;
  EXPECT_EQ(situate_proximity(s, Pose{}, c).size(), 2u);
}

TEST(Relations, OracleAgreesUnderOtherThresholds) {
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    RelationConfig c;
    c.contact_tolerance = rng.uniform(0.01, 0.1);
    c.support_min_overlap = rng.uniform(0.2, 0.9);
    c.inside_margin = rng.uniform(0.0, 0.1);
    c.vertical_gap = rng.uniform(0.0, 0.3);
    c.near_distance = rng.uniform(0.5, 1.5);
    c.far_distance = rng.uniform(2.0, 4.0);
    c.between_distance = rng.uniform(0.1, 0.6);
    c.between_min_span = rng.uniform(0.5, 2.0);
    c.aligned_residual = rng.uniform(0.02, 0.3);
    c.proximity_pair_cutoff = rng.uniform(1.0, 4.0);
    const Scene s = test::random_scene(rng);
    const Pose pose = test::random_pose(s, rng);
    EXPECT_EQ(oracle::as_triples(compute_static_relations(s, c)), oracle::static_relations(s, c));
    EXPECT_EQ(oracle::as_triples(situate_proximity(s, pose, c)), oracle::proximity_relations(s, pose, c));
  }
}

TEST(Relations, OracleNoticesAThresholdChange) {
  // guards against an oracle that silently mirrors the implementation
  Rng rng(32);
  RelationConfig shifted;
  shifted.near_distance = 1.3;
  std::size_t differing = 0;
  for (int i = 0; i < 20; ++i) {
    const Scene s = test::random_scene(rng);
    differing += oracle::as_triples(compute_static_relations(s, shifted)) != oracle::static_relations(s);
  }
  EXPECT_GT(differing, 0u);
}

TEST(Relations, ClockTableAndSweep) {
  for (int k = 0; k < 12; ++k) {
    EXPECT_EQ(clock_direction(to_radians(-30.0 * k)), k == 0 ? 12 : k);
  }
  EXPECT_EQ(clock_direction(to_radians(-60.0)), 2);
  EXPECT_EQ(clock_direction(to_radians(90.0)), 9);
  EXPECT_EQ(clock_direction(to_radians(180.0)), 6);
  for (int tenth = -3600; tenth < 3600; ++tenth) {
    const double deg = tenth / 10.0 + 0.03;
    EXPECT_EQ(clock_direction(to_radians(deg)), oracle::clock_hour(deg)) << deg;
  }
}

TEST(Relations, CoarseDirectionAndBands) {
  EXPECT_EQ(coarse_direction(0.0), Direction::front);
  EXPECT_EQ(coarse_direction(to_radians(44.9)), Direction::front);
  EXPECT_EQ(coarse_direction(to_radians(46)), Direction::left);
  EXPECT_EQ(coarse_direction(to_radians(-90)), Direction::right);
  EXPECT_EQ(coarse_direction(to_radians(136)), Direction::behind);
  EXPECT_EQ(coarse_direction(to_radians(-179)), Direction::behind);
  EXPECT_EQ(distance_band(1.5), DistanceBand::near);
  EXPECT_EQ(distance_band(1.51), DistanceBand::middle);
  EXPECT_EQ(distance_band(3.0), DistanceBand::middle);
  EXPECT_EQ(distance_band(3.01), DistanceBand::far);
}

TEST(Relations, AgentEdgesMatchDirectComputation) {
  Rng rng(33);
  for (int i = 0; i < 100; ++i) {
    const Scene s = test::random_scene(rng);
    const Pose pose = test::random_pose(s, rng);
    const auto edges = compute_agent_edges(s, pose);
    ASSERT_EQ(edges.size(), s.objects.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto& o = s.objects[k];
      const double dx = o.centroid.x - pose.location.x;
      const double dy = o.centroid.y - pose.location.y;
      const double fwd = std::cos(pose.rotation) * dx + std::sin(pose.rotation) * dy;
      const double lft = -std::sin(pose.rotation) * dx + std::cos(pose.rotation) * dy;
      const double deg = to_degrees(std::atan2(lft, fwd));
      EXPECT_EQ(edges[k].object, o.id);
      EXPECT_NEAR(edges[k].distance_m, std::hypot(dx, dy), 1e-9);
      EXPECT_NEAR(to_degrees(edges[k].bearing), deg, 1e-7);
      EXPECT_EQ(edges[k].clock, oracle::clock_hour(deg));
    }
  }
}

TEST(Relations, ConfigJson) {
  RelationConfig c;
  c.near_distance = 0.8;
  const RelationConfig back = RelationConfig::from_json(c.to_json());
  EXPECT_DOUBLE_EQ(back.near_distance, 0.8);
  EXPECT_DOUBLE_EQ(RelationConfig::from_json(json::object()).far_distance, 3.0);
  EXPECT_THROW(RelationConfig::from_json(json{{"nearest", 1.0}}), SchemaError);
  EXPECT_THROW(RelationConfig::from_json(json{{"near_distance", "x"}}), SchemaError);
  EXPECT_THROW(RelationConfig::from_json(json{{"near_distance", 5.0}}), SchemaError);
  EXPECT_THROW(RelationConfig::load("/nonexistent/relations.json"), Error);
}

TEST(Relations, KindNames) {
  for (const char* name : {"support", "inside", "above", "below", "near", "far", "left", "right", "front", "behind",
                           "between", "aligned"}) {
    const auto k = relation_kind_from_string(name);
    ASSERT_TRUE(k);
    EXPECT_EQ(to_string(*k), name);
  }
  EXPECT_FALSE(relation_kind_from_string("beside"));
}
