#include "situgen/graph.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"

namespace situgen {

using nlohmann::json;

const ObjectInstance* SituatedGraph::node(int id) const {
  const auto it = nodes.find(id);
  return it == nodes.end() ? nullptr : &it->second;
}

const AgentEdge* SituatedGraph::agent_edge(int id) const {
  const auto it = std::find_if(agent_edges.begin(), agent_edges.end(), [id](const auto& e) { return e.object == id; });
  return it == agent_edges.end() ? nullptr : &*it;
}

std::vector<Edge> SituatedGraph::all_edges() const {
  std::vector<Edge> out = static_edges;
  out.insert(out.end(), situated_edges.begin(), situated_edges.end());
  return out;
}

SituatedGraph build_situated_graph(const Scene& scene, const Situation& situation, const RelationConfig& config,
                                   std::string situation_id) {
  SituatedGraph g;
  g.scene_id = scene.scene_id;
  g.situation_id = std::move(situation_id);
  g.situation = situation;
  for (const auto& obj : scene.objects) {
    g.nodes.emplace(obj.id, obj);
  }
  g.static_edges = compute_static_relations(scene, config);
  g.situated_edges = situate_proximity(scene, situation.pose(), config);
  g.agent_edges = compute_agent_edges(scene, situation.pose(), config);
  return g;
}

SituatedGraph subgraph(const SituatedGraph& graph, double visible_distance) {
  SituatedGraph out;
  out.scene_id = graph.scene_id;
  out.situation_id = graph.situation_id;
  out.situation = graph.situation;
  std::set<int> keep;
  for (const auto& e : graph.agent_edges) {
    if (e.distance_m <= visible_distance && graph.nodes.count(e.object) != 0) {
      keep.insert(e.object);
      out.agent_edges.push_back(e);
    }
  }
  for (const int id : keep) {
    out.nodes.emplace(id, graph.nodes.at(id));
  }
  const auto kept = [&](const Edge& e) {
    return keep.count(e.src) != 0 && keep.count(e.dst) != 0 && (!e.extra || keep.count(*e.extra) != 0);
  };
  std::copy_if(graph.static_edges.begin(), graph.static_edges.end(), std::back_inserter(out.static_edges), kept);
  std::copy_if(graph.situated_edges.begin(), graph.situated_edges.end(), std::back_inserter(out.situated_edges),
               kept);
  return out;
}

void check_graph_integrity(const SituatedGraph& graph) {
  const auto check = [&](const Edge& e, bool situated_list) {
    const std::string what = std::string(to_string(e.kind)) + "(" + std::to_string(e.src) + ", " +
                             std::to_string(e.dst) + ")";
    if (graph.nodes.count(e.src) == 0 || graph.nodes.count(e.dst) == 0 ||
        (e.extra && graph.nodes.count(*e.extra) == 0)) {
      throw Error("edge " + what + " references a missing node");
    }
    if (is_situated(e.kind) != situated_list) {
      throw Error("edge " + what + " is in the wrong edge list");
    }
    if (e.src == e.dst || (e.extra && (*e.extra == e.src || *e.extra == e.dst))) {
      throw Error("edge " + what + " repeats an id");
    }
    if ((e.kind == RelationKind::between) != e.extra.has_value()) {
      throw Error("edge " + what + ": only between carries a third object");
    }
  };
  for (const auto& e : graph.static_edges) check(e, false);
  for (const auto& e : graph.situated_edges) check(e, true);
  for (const auto& e : graph.agent_edges) {
    if (graph.nodes.count(e.object) == 0) {
      throw Error("agent edge references missing node " + std::to_string(e.object));
    }
  }
}

json object_to_json(const ObjectInstance& obj) {
  json attrs = json::object();
  for (const Attribute a : kAllAttributes) {
    if (const auto& v = obj.attributes.get(a)) {
      attrs[std::string(attribute_key(a))] = *v;
    }
  }
  json desc = json::object();
  for (const Attribute a : kAllAttributes) {
    if (const auto& v = obj.attributes.get_descriptive(a)) {
      desc[std::string(attribute_key(a))] = *v;
    }
  }
  json o = {{"id", obj.id},
            {"label", obj.label},
            {"centroid", {obj.centroid.x, obj.centroid.y, obj.centroid.z}},
            {"size", {obj.size.x, obj.size.y, obj.size.z}},
            {"yaw", file_degrees(obj.yaw)},
            {"attributes", std::move(attrs)}};
  if (!desc.empty()) {
    o["descriptive_attributes"] = std::move(desc);
  }
  if (obj.image_ref) {
    o["image_ref"] = *obj.image_ref;
  }
  return o;
}

namespace {

json edge_to_json(const Edge& e) {
  return {{"kind", std::string(to_string(e.kind))},
          {"src", e.src},
          {"dst", e.dst},
          {"extra", e.extra ? json(*e.extra) : json(nullptr)}};
}

Edge edge_from_json(const json& v) {
  const auto kind_text = v.at("kind").get<std::string>();
  const auto kind = relation_kind_from_string(kind_text);
  if (!kind) {
    throw SchemaError("edges.kind", "unknown relation '" + kind_text + "'");
  }
  Edge e{*kind, v.at("src").get<int>(), v.at("dst").get<int>(), std::nullopt};
  if (v.contains("extra") && !v["extra"].is_null()) {
    e.extra = v["extra"].get<int>();
  }
  return e;
}

ObjectInstance object_from_graph_json(const json& v) {
  ObjectInstance o;
  o.id = v.at("id").get<int>();
  o.label = v.at("label").get<std::string>();
  const auto& c = v.at("centroid");
  o.centroid = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
  const auto& s = v.at("size");
  o.size = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
  if (v.contains("yaw")) {
    o.yaw = file_radians(v["yaw"].get<double>());
  }
  if (v.contains("attributes")) {
    for (const auto& [key, value] : v["attributes"].items()) {
      if (const auto a = attribute_from_key(key)) {
        o.attributes.get(*a) = value.get<std::string>();
      }
    }
  }
  if (v.contains("descriptive_attributes")) {
    for (const auto& [key, value] : v["descriptive_attributes"].items()) {
      if (const auto a = attribute_from_key(key)) {
        o.attributes.get_descriptive(*a) = value.get<std::string>();
      }
    }
  }
  if (v.contains("image_ref")) {
    o.image_ref = v["image_ref"].get<std::string>();
  }
  return o;
}

}  // namespace

json graph_to_json(const SituatedGraph& graph) {
  json nodes = json::array();
  for (const auto& [_, obj] : graph.nodes) {
    nodes.push_back(object_to_json(obj));
  }
  json edges = json::array();
  for (const auto& e : graph.static_edges) {
    json j = edge_to_json(e);
    j["situated"] = false;
    edges.push_back(std::move(j));
  }
  for (const auto& e : graph.situated_edges) {
    json j = edge_to_json(e);
    j["situated"] = true;
    edges.push_back(std::move(j));
  }
  json agent = json::array();
  for (const auto& e : graph.agent_edges) {
    agent.push_back({{"object", e.object},
                     {"distance_m", e.distance_m},
                     {"bearing_deg", to_degrees(e.bearing)},
                     {"band", std::string(to_string(e.band))},
                     {"coarse", std::string(to_string(e.coarse))},
                     {"clock", e.clock}});
  }
  return {{"scene_id", graph.scene_id},
          {"situation_id", graph.situation_id},
          {"situation", situation_to_json(graph.situation)},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)},
          {"agent_edges", std::move(agent)}};
}

SituatedGraph graph_from_json(const json& value) {
  if (!value.is_object()) throw SchemaError("graph", "expected an object");
  SituatedGraph g;
  try {
    g.scene_id = value.at("scene_id").get<std::string>();
    g.situation_id = value.value("situation_id", std::string());
    g.situation = situation_from_json(value.at("situation"));
    for (const auto& n : value.at("nodes")) {
      ObjectInstance o = object_from_graph_json(n);
      const int id = o.id;
      g.nodes.emplace(id, std::move(o));
    }
    for (const auto& e : value.at("edges")) {
      Edge edge = edge_from_json(e);
      (e.value("situated", is_situated(edge.kind)) ? g.situated_edges : g.static_edges).push_back(edge);
    }
    for (const auto& a : value.at("agent_edges")) {
      AgentEdge e;
      e.object = a.at("object").get<int>();
      e.distance_m = a.at("distance_m").get<double>();
      e.bearing = to_radians(a.at("bearing_deg").get<double>());
      e.band = distance_band_from_string(a.at("band").get<std::string>()).value_or(DistanceBand::far);
      e.coarse = direction_from_string(a.at("coarse").get<std::string>()).value_or(Direction::front);
      e.clock = a.at("clock").get<int>();
      g.agent_edges.push_back(e);
    }
  } catch (const json::exception& e) {
    throw SchemaError("graph", e.what());
  }
  return g;
}

}  // namespace situgen
