#include "random_scene.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace situgen::test {

namespace {

const std::vector<std::string> kLabels = {"chair", "table", "lamp", "box", "book", "cup", "shelf", "plant"};

double pick_yaw(Rng& rng, bool rotated) {
  if (!rotated || rng.uniform() < 0.6) {
    return 0.0;
  }
  return rng.uniform(0.05, kTwoPi - 0.05);
}

ObjectInstance free_object(Rng& rng, double w, double h, bool rotated) {
  ObjectInstance o;
  o.label = kLabels[rng.index(kLabels.size())];
  o.size = {rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.5), rng.uniform(0.2, 1.2)};
  o.centroid = {rng.uniform(0.3, w - 0.3), rng.uniform(0.3, h - 0.3), 0.0};
  o.centroid.z = 0.5 * o.size.z;
  o.yaw = pick_yaw(rng, rotated);
  return o;
}

}  // namespace

Scene random_scene(Rng& rng, const RandomSceneOptions& options) {
  Scene scene;
  scene.scene_id = "random_" + std::to_string(rng.next() % 1000000);
  const double w = rng.uniform(options.min_side, options.max_side);
  const double h = rng.uniform(options.min_side, options.max_side);
  scene.floor.polygon = std::vector<Vec2>{{0, 0}, {w, 0}, {w, h}, {0, h}};

  const int n = options.min_objects +
                static_cast<int>(rng.index(static_cast<std::size_t>(options.max_objects - options.min_objects + 1)));
  std::set<int> used_ids;
  const auto fresh_id = [&] {
    int id = 0;
    do {
      id = static_cast<int>(rng.index(200));
    } while (used_ids.count(id) != 0);
    used_ids.insert(id);
    return id;
  };

  auto& objs = scene.objects;
  while (static_cast<int>(objs.size()) < n) {
    const double r = rng.uniform();
    const int remaining = n - static_cast<int>(objs.size());
    if (r < 0.15 && remaining >= 3) {
      // same-label row, sometimes bent past the alignment tolerance
      const std::string label = kLabels[rng.index(kLabels.size())];
      const Vec2 start{rng.uniform(0.5, w - 0.5), rng.uniform(0.5, h - 0.5)};
      const double heading = rng.uniform(0.0, kTwoPi);
      const Vec2 dir{std::cos(heading), std::sin(heading)};
      const Vec2 perp{-dir.y, dir.x};
      const double spacing = rng.uniform(0.5, 1.2);
      for (int k = 0; k < 3; ++k) {
        ObjectInstance o;
        o.label = label;
        o.size = {0.4, 0.4, 0.8};
        const double jitter = k == 1 ? rng.uniform(-0.25, 0.25) : 0.0;
        const Vec2 p = start + dir * (spacing * k) + perp * jitter;
        o.centroid = {p.x, p.y, 0.4};
        o.id = fresh_id();
        objs.push_back(o);
      }
      continue;
    }
    if (objs.empty() || r < 0.55) {
      ObjectInstance o = free_object(rng, w, h, options.rotated_objects);
      o.id = fresh_id();
      objs.push_back(o);
      continue;
    }
    const ObjectInstance base = objs[rng.index(objs.size())];
    ObjectInstance o;
    o.label = kLabels[rng.index(kLabels.size())];
    o.yaw = 0.0;
    const double sx = base.size.x * rng.uniform(0.2, 0.9);
    const double sy = base.size.y * rng.uniform(0.2, 0.9);
    const double dx = rng.uniform(-0.5, 0.5) * (base.size.x - sx);
    const double dy = rng.uniform(-0.5, 0.5) * (base.size.y - sy);
    if (r < 0.75) {
      // resting on top, within or just outside the contact tolerance
      o.size = {sx, sy, rng.uniform(0.05, 0.4)};
      const double gap = rng.uniform() < 0.8 ? rng.uniform(-0.03, 0.03) : rng.uniform(0.06, 0.15);
      o.centroid = {base.centroid.x + dx, base.centroid.y + dy, base.top() + gap + 0.5 * o.size.z};
    } else if (r < 0.88) {
      // contained
      o.size = {sx, sy, base.size.z * rng.uniform(0.2, 0.8)};
      const double dz = rng.uniform(-0.5, 0.5) * (base.size.z - o.size.z);
      o.centroid = {base.centroid.x + dx, base.centroid.y + dy, base.centroid.z + dz};
    } else {
      // floating above
      o.size = {sx, sy, rng.uniform(0.05, 0.4)};
      o.centroid = {base.centroid.x + dx, base.centroid.y + dy, base.top() + rng.uniform(0.2, 1.0) + 0.5 * o.size.z};
    }
    o.id = fresh_id();
    objs.push_back(o);
  }
  return scene;
}

Pose random_pose(const Scene& scene, Rng& rng) {
  const Rect b = scene.floor.bounds();
  Pose pose;
  pose.location = {rng.uniform(b.min.x, b.max.x), rng.uniform(b.min.y, b.max.y), 0.0};
  pose.rotation = rng.uniform(0.0, kTwoPi);
  return pose;
}

OccupancyGrid random_grid(Rng& rng, int width, int height, double obstacle_ratio) {
  OccupancyGrid grid({0.0, 0.0}, 0.1, width, height);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    grid.cells[i] = rng.uniform() >= obstacle_ratio;
  }
  return grid;
}

}  // namespace situgen::test
