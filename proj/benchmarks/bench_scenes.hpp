#pragma once

#include <cmath>
#include <string>

#include "situgen/rng.hpp"
#include "situgen/scene.hpp"

namespace situgen::bench {

/// Square room of `n` small boxes, a few of them stacked.
inline Scene synthetic_room(int n, std::uint64_t seed) {
  Rng rng(seed);
  const double side = 1.5 * std::sqrt(static_cast<double>(n)) + 2.0;
  Scene s;
  s.scene_id = "bench_" + std::to_string(n);
  s.floor.polygon = std::vector<Vec2>{{0, 0}, {side, 0}, {side, side}, {0, side}};
  const char* labels[] = {"chair", "table", "lamp", "box", "plant", "cabinet"};
  for (int i = 0; i < n; ++i) {
    ObjectInstance o;
    o.id = i + 1;
    o.label = labels[rng.index(6)];
    o.size = {rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.2)};
    o.centroid = {rng.uniform(0.5, side - 0.5), rng.uniform(0.5, side - 0.5), 0.5 * o.size.z};
    if (i > 0 && rng.uniform() < 0.15) {
      const ObjectInstance& base = s.objects[rng.index(s.objects.size())];
      o.centroid = {base.centroid.x, base.centroid.y, base.top() + 0.5 * o.size.z};
    }
    if (rng.uniform() < 0.3) o.set(ObjectFlag::large_interactable);
    s.objects.push_back(o);
  }
  return s;
}

inline OccupancyGrid open_grid(int side, double obstacle_ratio, std::uint64_t seed) {
  Rng rng(seed);
  OccupancyGrid g({0, 0}, 0.1, side, side);
  for (std::size_t i = 0; i < g.cells.size(); ++i) g.cells[i] = rng.uniform() >= obstacle_ratio;
  g.cells.front() = true;
  g.cells.back() = true;
  return g;
}

}  // namespace situgen::bench
