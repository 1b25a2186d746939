#pragma once

#include <cstdint>

#include "situgen/rng.hpp"
#include "situgen/scene.hpp"
#include "situgen/situation.hpp"

namespace situgen::test {

struct RandomSceneOptions {
  int min_objects = 2;
  int max_objects = 15;
  double min_side = 5.0;
  double max_side = 10.0;
  bool rotated_objects = true;
};

/// Rectangular room with a mix of free-standing, stacked, contained,
/// floating and collinear same-label objects. Ids are distinct but sparse.
Scene random_scene(Rng& rng, const RandomSceneOptions& options = {});

/// Location inside the floor bounds, heading uniform in [0, 2pi).
Pose random_pose(const Scene& scene, Rng& rng);

/// Random occupancy grid with the given obstacle ratio.
OccupancyGrid random_grid(Rng& rng, int width, int height, double obstacle_ratio);

}  // namespace situgen::test
