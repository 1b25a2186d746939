#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "situgen/relations.hpp"
#include "situgen/situation.hpp"

namespace situgen {

/// Scene graph conditioned on one agent situation. Static edges hold for any
/// viewpoint; situated edges and agent edges are only valid for `situation`.
struct SituatedGraph {
  std::string scene_id;
  std::string situation_id;
  Situation situation;
  std::map<int, ObjectInstance> nodes;
  std::vector<Edge> static_edges;
  std::vector<Edge> situated_edges;
  std::vector<AgentEdge> agent_edges;

  const ObjectInstance* node(int id) const;
  const AgentEdge* agent_edge(int id) const;
  /// Static followed by situated edges.
  std::vector<Edge> all_edges() const;

  friend bool operator==(const SituatedGraph&, const SituatedGraph&) = default;
};

SituatedGraph build_situated_graph(const Scene& scene, const Situation& situation,
                                   const RelationConfig& config = {}, std::string situation_id = {});

/// Keeps objects within `visible_distance` of the agent and the edges among
/// them. Infinity is the identity.
SituatedGraph subgraph(const SituatedGraph& graph, double visible_distance);

/// Throws Error if an edge names a missing node, a situated kind sits in the
/// static list (or vice versa), or an edge repeats an id.
void check_graph_integrity(const SituatedGraph& graph);

/// `{"scene_id", "situation_id", "situation", "nodes": [...], "edges": [...],
/// "agent_edges": [...]}`; edges carry a `"situated"` flag.
nlohmann::json graph_to_json(const SituatedGraph& graph);
SituatedGraph graph_from_json(const nlohmann::json& value);

nlohmann::json object_to_json(const ObjectInstance& obj);

}  // namespace situgen
