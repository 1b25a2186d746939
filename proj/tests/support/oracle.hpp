#pragma once

#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "situgen/relations.hpp"
#include "situgen/scene.hpp"

// Brute-force re-derivations used as test oracles. Nothing here calls into
// the relation or planning code under test.
namespace situgen::oracle {

/// (kind name, src, dst, extra or -1)
using Triple = std::tuple<std::string, int, int, int>;

std::set<Triple> static_relations(const Scene& scene, const RelationConfig& c = {});
std::set<Triple> proximity_relations(const Scene& scene, const Pose& pose, const RelationConfig& c = {});

std::set<Triple> as_triples(const std::vector<Edge>& edges);

/// Clock hour by table lookup over 30 degree sectors.
int clock_hour(double bearing_degrees);

/// Plain 4-connected BFS; steps, or nullopt.
std::optional<int> bfs_steps(const OccupancyGrid& grid, Cell start, Cell goal);

/// Action name for a signed turn angle in degrees.
std::string action_name(double theta_degrees);

}  // namespace situgen::oracle
