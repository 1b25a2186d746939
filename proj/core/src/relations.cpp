#include "situgen/relations.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"

namespace situgen {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 12> kKindNames = {
    "support", "inside", "above", "below", "near",    "far",
    "left",    "right",  "front", "behind", "between", "aligned"};

struct Box3 {
  Rect xy;
  double z0;
  double z1;
};

Box3 box_of(const ObjectInstance& obj) { return {obj.footprint_bounds(), obj.bottom(), obj.top()}; }

bool box_contains(const Box3& outer, const Box3& inner, double margin) {
  const Rect o = outer.xy.inflated(margin);
  return inner.xy.min.x >= o.min.x && inner.xy.max.x <= o.max.x && inner.xy.min.y >= o.min.y &&
         inner.xy.max.y <= o.max.y && inner.z0 >= outer.z0 - margin && inner.z1 <= outer.z1 + margin;
}

/// Height of the triangle over its longest side; 0 for coincident points.
double collinearity_residual(Vec2 a, Vec2 b, Vec2 c) {
  const double ab = distance(a, b);
  const double bc = distance(b, c);
  const double ca = distance(c, a);
  const double longest = std::max({ab, bc, ca});
  if (longest == 0.0) {
    return 0.0;
  }
  return std::abs(cross(b - a, c - a)) / longest;
}

}  // namespace

// --- config -----------------------------------------------------------------

RelationConfig RelationConfig::from_json(const json& value) {
  if (!value.is_object()) {
    throw SchemaError("relation_config", "expected an object");
  }
  RelationConfig c;
  const auto read = [&](const char* key, double& slot) {
    if (value.contains(key)) {
      if (!value[key].is_number()) {
        throw SchemaError(std::string("relation_config.") + key, "expected a number");
      }
      slot = value[key].get<double>();
    }
  };
  for (const auto& [key, _] : value.items()) {
    static const std::set<std::string> known = {
        "contact_tolerance", "support_min_overlap",  "inside_margin",    "vertical_gap",
        "near_distance",     "far_distance",         "between_distance", "between_min_span",
        "aligned_residual",  "proximity_pair_cutoff", "agent_near",      "agent_middle"};
    if (known.count(key) == 0) {
      throw SchemaError("relation_config." + key, "unknown field");
    }
  }
  read("contact_tolerance", c.contact_tolerance);
  read("support_min_overlap", c.support_min_overlap);
  read("inside_margin", c.inside_margin);
  read("vertical_gap", c.vertical_gap);
  read("near_distance", c.near_distance);
  read("far_distance", c.far_distance);
  read("between_distance", c.between_distance);
  read("between_min_span", c.between_min_span);
  read("aligned_residual", c.aligned_residual);
  read("proximity_pair_cutoff", c.proximity_pair_cutoff);
  read("agent_near", c.agent_near);
  read("agent_middle", c.agent_middle);
  if (!(c.near_distance < c.far_distance) || !(c.agent_near < c.agent_middle)) {
    throw SchemaError("relation_config", "near thresholds must be below far thresholds");
  }
  return c;
}

RelationConfig RelationConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open relation config " + path.string());
  }
  return from_json(json::parse(in));
}

json RelationConfig::to_json() const {
  return {{"contact_tolerance", contact_tolerance},
          {"support_min_overlap", support_min_overlap},
          {"inside_margin", inside_margin},
          {"vertical_gap", vertical_gap},
          {"near_distance", near_distance},
          {"far_distance", far_distance},
          {"between_distance", between_distance},
          {"between_min_span", between_min_span},
          {"aligned_residual", aligned_residual},
          {"proximity_pair_cutoff", proximity_pair_cutoff},
          {"agent_near", agent_near},
          {"agent_middle", agent_middle}};
}

// --- names --------------------------------------------------------------------

std::string_view to_string(RelationKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<RelationKind> relation_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) {
      return static_cast<RelationKind>(i);
    }
  }
  return std::nullopt;
}

bool is_situated(RelationKind kind) {
  return kind == RelationKind::left || kind == RelationKind::right || kind == RelationKind::front ||
         kind == RelationKind::behind;
}

std::string_view to_string(DistanceBand band) {
  switch (band) {
    case DistanceBand::near: return "near";
    case DistanceBand::middle: return "middle";
    case DistanceBand::far: return "far";
  }
  return "near";
}

std::string_view to_string(Direction direction) {
  switch (direction) {
    case Direction::left: return "left";
    case Direction::right: return "right";
    case Direction::front: return "front";
    case Direction::behind: return "behind";
  }
  return "front";
}

std::optional<DistanceBand> distance_band_from_string(std::string_view text) {
  if (text == "near") return DistanceBand::near;
  if (text == "middle") return DistanceBand::middle;
  if (text == "far") return DistanceBand::far;
  return std::nullopt;
}

std::optional<Direction> direction_from_string(std::string_view text) {
  if (text == "left") return Direction::left;
  if (text == "right") return Direction::right;
  if (text == "front") return Direction::front;
  if (text == "behind") return Direction::behind;
  return std::nullopt;
}

// --- egocentric labels -----------------------------------------------------------

int clock_direction(double bearing) {
  const double hours = std::round(-wrap_pi(bearing) / (kPi / 6.0));
  const int hour = ((static_cast<int>(hours) % 12) + 12) % 12;
  return hour == 0 ? 12 : hour;
}

Direction coarse_direction(double bearing) {
  const double b = wrap_pi(bearing);
  if (std::abs(b) <= kPi / 4.0) {
    return Direction::front;
  }
  if (std::abs(b) >= 3.0 * kPi / 4.0) {
    return Direction::behind;
  }
  return b > 0.0 ? Direction::left : Direction::right;
}

DistanceBand distance_band(double distance, const RelationConfig& config) {
  if (distance <= config.agent_near) {
    return DistanceBand::near;
  }
  if (distance <= config.agent_middle) {
    return DistanceBand::middle;
  }
  return DistanceBand::far;
}

// --- relations ------------------------------------------------------------------

std::vector<Edge> compute_static_relations(const Scene& scene, const RelationConfig& config) {
  const auto& objs = scene.objects;
  const std::size_t n = objs.size();
  std::vector<Box3> boxes;
  boxes.reserve(n);
  for (const auto& o : objs) {
    boxes.push_back(box_of(o));
  }

  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        continue;
      }
      const auto& a = objs[i];
      const auto& b = objs[j];
      const Box3& ba = boxes[i];
      const Box3& bb = boxes[j];
      const double overlap = overlap_area(ba.xy, bb.xy);
      const double smaller = std::min(ba.xy.area(), bb.xy.area());

      if (overlap >= config.support_min_overlap * smaller &&
          std::abs(ba.z1 - bb.z0) <= config.contact_tolerance) {
        edges.push_back({RelationKind::support, a.id, b.id, std::nullopt});
      }
      if (box_contains(ba, bb, config.inside_margin)) {
        edges.push_back({RelationKind::inside, a.id, b.id, std::nullopt});
      }
      if (overlap > 0.0 && ba.z0 - bb.z1 > config.vertical_gap) {
        edges.push_back({RelationKind::above, a.id, b.id, std::nullopt});
        edges.push_back({RelationKind::below, b.id, a.id, std::nullopt});
      }
      const double d = distance(a.centroid.xy(), b.centroid.xy());
      if (d <= config.near_distance) {
        edges.push_back({RelationKind::near, a.id, b.id, std::nullopt});
      } else if (d >= config.far_distance) {
        edges.push_back({RelationKind::far, a.id, b.id, std::nullopt});
      }
    }
  }

  // between(a; b, c) with b < c by id.
  for (std::size_t bi = 0; bi < n; ++bi) {
    for (std::size_t ci = 0; ci < n; ++ci) {
      if (bi == ci || objs[bi].id > objs[ci].id) {
        continue;
      }
      const Vec2 pb = objs[bi].centroid.xy();
      const Vec2 pc = objs[ci].centroid.xy();
      if (distance(pb, pc) < config.between_min_span) {
        continue;
      }
      for (std::size_t ai = 0; ai < n; ++ai) {
        if (ai == bi || ai == ci) {
          continue;
        }
        const auto proj = project_onto_segment(objs[ai].centroid.xy(), pb, pc);
        if (proj.t >= 0.0 && proj.t <= 1.0 && proj.distance <= config.between_distance) {
          edges.push_back({RelationKind::between, objs[ai].id, objs[bi].id, objs[ci].id});
        }
      }
    }
  }

  // aligned: pairs belonging to a collinear same-label triple.
  std::set<std::pair<int, int>> aligned;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (objs[i].label != objs[j].label) {
        continue;
      }
      for (std::size_t k = j + 1; k < n; ++k) {
        if (objs[k].label != objs[i].label) {
          continue;
        }
        if (collinearity_residual(objs[i].centroid.xy(), objs[j].centroid.xy(), objs[k].centroid.xy()) <=
            config.aligned_residual) {
          for (const auto& [p, q] : {std::pair{i, j}, std::pair{i, k}, std::pair{j, k}}) {
            aligned.insert({objs[p].id, objs[q].id});
            aligned.insert({objs[q].id, objs[p].id});
          }
        }
      }
    }
  }
  for (const auto& [p, q] : aligned) {
    edges.push_back({RelationKind::aligned, p, q, std::nullopt});
  }

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<Edge> situate_proximity(const Scene& scene, const Pose& pose, const RelationConfig& config) {
  const auto& objs = scene.objects;
  std::vector<Edge> edges;
  for (const auto& a : objs) {
    for (const auto& b : objs) {
      if (a.id == b.id) {
        continue;
      }
      const Vec2 world = b.centroid.xy() - a.centroid.xy();
      if (norm(world) > config.proximity_pair_cutoff) {
        continue;
      }
      const Vec2 d = rotate(world, -pose.rotation);
      // b relative to a, in 90 degree sectors; exact diagonals emit nothing.
      if (d.y > std::abs(d.x)) {
        edges.push_back({RelationKind::left, b.id, a.id, std::nullopt});
      } else if (-d.y > std::abs(d.x)) {
        edges.push_back({RelationKind::right, b.id, a.id, std::nullopt});
      } else if (d.x > std::abs(d.y)) {
        edges.push_back({RelationKind::front, b.id, a.id, std::nullopt});
      } else if (-d.x > std::abs(d.y)) {
        edges.push_back({RelationKind::behind, b.id, a.id, std::nullopt});
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<AgentEdge> compute_agent_edges(const Scene& scene, const Pose& pose, const RelationConfig& config) {
  std::vector<AgentEdge> out;
  out.reserve(scene.objects.size());
  for (const auto& obj : scene.objects) {
    const Vec2 v = rotate(obj.centroid.xy() - pose.location.xy(), -pose.rotation);
    AgentEdge e;
    e.object = obj.id;
    e.distance_m = norm(v);
    e.bearing = (v.x == 0.0 && v.y == 0.0) ? 0.0 : std::atan2(v.y, v.x);
    e.band = distance_band(e.distance_m, config);
    e.coarse = coarse_direction(e.bearing);
    e.clock = clock_direction(e.bearing);
    out.push_back(e);
  }
  return out;
}

}  // namespace situgen
