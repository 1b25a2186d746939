#include <gtest/gtest.h>

#include <limits>

#include <nlohmann/json.hpp>

#include "random_scene.hpp"
#include "situgen/error.hpp"
#include "situgen/graph.hpp"
#include "test_util.hpp"

using namespace situgen;
using nlohmann::json;

namespace {

SituatedGraph random_graph(Rng& rng) {
  const Scene s = test::random_scene(rng);
  Situation sit;
  const Pose p = test::random_pose(s, rng);
  sit.location = p.location;
  sit.rotation = p.rotation;
  return build_situated_graph(s, sit, {}, "g");
}

}  // namespace

TEST(Graph, IntegrityOnRandomScenes) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const SituatedGraph g = random_graph(rng);
    EXPECT_NO_THROW(check_graph_integrity(g));
    EXPECT_EQ(g.agent_edges.size(), g.nodes.size());
    EXPECT_EQ(g.all_edges().size(), g.static_edges.size() + g.situated_edges.size());
  }
}

TEST(Graph, IntegrityRejectsBrokenGraphs) {
  Rng rng(2);
  SituatedGraph g = random_graph(rng);
  while (g.static_edges.empty()) g = random_graph(rng);

  SituatedGraph missing = g;
  missing.static_edges.push_back({RelationKind::near, g.nodes.begin()->first, 9999, std::nullopt});
  EXPECT_THROW(check_graph_integrity(missing), Error);

  SituatedGraph wrong_list = g;
  const int a = g.nodes.begin()->first;
  const int b = std::next(g.nodes.begin())->first;
  wrong_list.static_edges.push_back({RelationKind::left, a, b, std::nullopt});
  EXPECT_THROW(check_graph_integrity(wrong_list), Error);

  SituatedGraph self = g;
  self.static_edges.push_back({RelationKind::near, a, a, std::nullopt});
  EXPECT_THROW(check_graph_integrity(self), Error);
}

TEST(Graph, SubgraphInfinityIsIdentity) {
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const SituatedGraph g = random_graph(rng);
    EXPECT_EQ(subgraph(g, std::numeric_limits<double>::infinity()), g);
  }
}

TEST(Graph, SubgraphIsIdempotentAndMonotone) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const SituatedGraph g = random_graph(rng);
    const double r1 = rng.uniform(0.5, 4.0);
    const double r2 = r1 + rng.uniform(0.0, 4.0);
    const SituatedGraph small = subgraph(g, r1);
    const SituatedGraph large = subgraph(g, r2);
    EXPECT_EQ(subgraph(small, r1), small);
    EXPECT_EQ(subgraph(large, r1), small);
    EXPECT_NO_THROW(check_graph_integrity(small));
    for (const auto& [id, node] : small.nodes) EXPECT_TRUE(large.nodes.count(id));
    for (const auto& e : small.static_edges) {
      EXPECT_NE(std::find(large.static_edges.begin(), large.static_edges.end(), e), large.static_edges.end());
    }
    for (const auto& e : small.agent_edges) EXPECT_LE(e.distance_m, r1);
  }
}

TEST(Graph, JsonRoundTripIsStable) {
  for (const auto& s : load_scene_pack(test::scenes_dir())) {
    Rng rng(5);
    Situation sit = canonicalized(SituationSampler(s).standing(rng));
    const SituatedGraph g = build_situated_graph(s, sit, {}, s.scene_id + ":s0");
    const json j = graph_to_json(g);
    const SituatedGraph back = graph_from_json(j);
    EXPECT_EQ(graph_to_json(back).dump(), j.dump());
    EXPECT_EQ(back.static_edges, g.static_edges);
    EXPECT_EQ(back.situated_edges, g.situated_edges);
    EXPECT_EQ(back.nodes.size(), g.nodes.size());
    EXPECT_EQ(back.situation_id, g.situation_id);
  }
}

TEST(Graph, JsonRejectsGarbage) {
  EXPECT_THROW(graph_from_json(json::array()), Error);
  EXPECT_THROW(graph_from_json(json{{"scene_id", "x"}}), Error);
}

TEST(Graph, Lookup) {
  Rng rng(6);
  const SituatedGraph g = random_graph(rng);
  const int id = g.nodes.begin()->first;
  ASSERT_NE(g.node(id), nullptr);
  EXPECT_EQ(g.node(id)->id, id);
  ASSERT_NE(g.agent_edge(id), nullptr);
  EXPECT_EQ(g.node(-5), nullptr);
}
