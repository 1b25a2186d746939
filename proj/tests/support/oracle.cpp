#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace situgen::oracle {

namespace {

struct Box {
  double x0, x1, y0, y1, z0, z1;
};

Box aabb(const ObjectInstance& o) {
  double yaw = std::fmod(o.yaw, kTwoPi);
  if (yaw > kPi) yaw -= kTwoPi;
  if (yaw <= -kPi) yaw += kTwoPi;
  if (std::abs(yaw) <= 1e-6) yaw = 0.0;
  const double hx = o.size.x / 2.0;
  const double hy = o.size.y / 2.0;
  Box b{};
  if (yaw == 0.0) {
    b.x0 = o.centroid.x - hx;
    b.x1 = o.centroid.x + hx;
    b.y0 = o.centroid.y - hy;
    b.y1 = o.centroid.y + hy;
  } else {
    b.x0 = b.y0 = std::numeric_limits<double>::infinity();
    b.x1 = b.y1 = -std::numeric_limits<double>::infinity();
    for (const double sx : {-1.0, 1.0}) {
      for (const double sy : {-1.0, 1.0}) {
        const double lx = sx * hx;
        const double ly = sy * hy;
        const double x = std::cos(o.yaw) * lx - std::sin(o.yaw) * ly + o.centroid.x;
        const double y = std::sin(o.yaw) * lx + std::cos(o.yaw) * ly + o.centroid.y;
        b.x0 = std::min(b.x0, x);
        b.x1 = std::max(b.x1, x);
        b.y0 = std::min(b.y0, y);
        b.y1 = std::max(b.y1, y);
      }
    }
  }
  b.z0 = o.centroid.z - o.size.z / 2.0;
  b.z1 = o.centroid.z + o.size.z / 2.0;
  return b;
}

double xy_overlap(const Box& a, const Box& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double xy_area(const Box& b) { return (b.x1 - b.x0) * (b.y1 - b.y0); }

double dist(const ObjectInstance& a, const ObjectInstance& b) {
  return std::hypot(a.centroid.x - b.centroid.x, a.centroid.y - b.centroid.y);
}

}  // namespace

std::set<Triple> static_relations(const Scene& scene, const RelationConfig& c) {
  std::set<Triple> out;
  const auto& objs = scene.objects;
  for (const auto& a : objs) {
    for (const auto& b : objs) {
      if (&a == &b) continue;
      const Box ba = aabb(a);
      const Box bb = aabb(b);
      const double ov = xy_overlap(ba, bb);
      // a supports b: b rests on a's top
      if (ov >= c.support_min_overlap * std::min(xy_area(ba), xy_area(bb)) &&
          std::abs(bb.z0 - ba.z1) <= c.contact_tolerance) {
        out.insert({"support", a.id, b.id, -1});
      }
      // a contains b
      const double m = c.inside_margin;
      if (bb.x0 >= ba.x0 - m && bb.x1 <= ba.x1 + m && bb.y0 >= ba.y0 - m && bb.y1 <= ba.y1 + m &&
          bb.z0 >= ba.z0 - m && bb.z1 <= ba.z1 + m) {
        out.insert({"inside", a.id, b.id, -1});
      }
      if (ov > 0.0 && ba.z0 - bb.z1 > c.vertical_gap) {
        out.insert({"above", a.id, b.id, -1});
      }
      if (ov > 0.0 && bb.z0 - ba.z1 > c.vertical_gap) {
        out.insert({"below", a.id, b.id, -1});
      }
      const double d = dist(a, b);
      if (d <= c.near_distance) out.insert({"near", a.id, b.id, -1});
      if (d >= c.far_distance) out.insert({"far", a.id, b.id, -1});
    }
  }
  // between: a lies on segment b-c (b.id < c.id)
  for (const auto& a : objs) {
    for (const auto& b : objs) {
      for (const auto& cc : objs) {
        if (a.id == b.id || a.id == cc.id || b.id >= cc.id) continue;
        const double ux = cc.centroid.x - b.centroid.x;
        const double uy = cc.centroid.y - b.centroid.y;
        const double len2 = ux * ux + uy * uy;
        if (std::sqrt(len2) < c.between_min_span) continue;
        const double t = ((a.centroid.x - b.centroid.x) * ux + (a.centroid.y - b.centroid.y) * uy) / len2;
        if (t < 0.0 || t > 1.0) continue;
        const double px = b.centroid.x + t * ux;
        const double py = b.centroid.y + t * uy;
        if (std::hypot(a.centroid.x - px, a.centroid.y - py) <= c.between_distance) {
          out.insert({"between", a.id, b.id, cc.id});
        }
      }
    }
  }
  // aligned: same label triple, triangle height over longest side
  for (std::size_t i = 0; i < objs.size(); ++i) {
    for (std::size_t j = 0; j < objs.size(); ++j) {
      for (std::size_t k = 0; k < objs.size(); ++k) {
        if (!(i < j && j < k)) continue;
        if (objs[i].label != objs[j].label || objs[j].label != objs[k].label) continue;
        const double ab = dist(objs[i], objs[j]);
        const double bc = dist(objs[j], objs[k]);
        const double ca = dist(objs[k], objs[i]);
        const double longest = std::max({ab, bc, ca});
        const double area2 = std::abs((objs[j].centroid.x - objs[i].centroid.x) * (objs[k].centroid.y - objs[i].centroid.y) -
                                      (objs[j].centroid.y - objs[i].centroid.y) * (objs[k].centroid.x - objs[i].centroid.x));
        const double residual = longest == 0.0 ? 0.0 : area2 / longest;
        if (residual <= c.aligned_residual) {
          for (const auto* p : {&objs[i], &objs[j], &objs[k]}) {
            for (const auto* q : {&objs[i], &objs[j], &objs[k]}) {
              if (p != q) out.insert({"aligned", p->id, q->id, -1});
            }
          }
        }
      }
    }
  }
  return out;
}

std::set<Triple> proximity_relations(const Scene& scene, const Pose& pose, const RelationConfig& c) {
  std::set<Triple> out;
  const double cs = std::cos(pose.rotation);
  const double sn = std::sin(pose.rotation);
  for (const auto& a : scene.objects) {
    for (const auto& b : scene.objects) {
      if (a.id == b.id) continue;
      const double wx = b.centroid.x - a.centroid.x;
      const double wy = b.centroid.y - a.centroid.y;
      if (std::hypot(wx, wy) > c.proximity_pair_cutoff) continue;
      // world offset in the agent frame (x ahead, y left)
      const double fwd = cs * wx + sn * wy;
      const double lft = -sn * wx + cs * wy;
      std::string kind;
      if (lft > std::abs(fwd)) kind = "left";
      else if (-lft > std::abs(fwd)) kind = "right";
      else if (fwd > std::abs(lft)) kind = "front";
      else if (-fwd > std::abs(lft)) kind = "behind";
      if (!kind.empty()) out.insert({kind, b.id, a.id, -1});
    }
  }
  return out;
}

std::set<Triple> as_triples(const std::vector<Edge>& edges) {
  std::set<Triple> out;
  for (const auto& e : edges) {
    out.insert({std::string(to_string(e.kind)), e.src, e.dst, e.extra.value_or(-1)});
  }
  return out;
}

int clock_hour(double bearing_degrees) {
  // clockwise angle from straight ahead, in [0, 360)
  double cw = std::fmod(-bearing_degrees, 360.0);
  if (cw < 0.0) cw += 360.0;
  static const int table[12] = {12, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  const int sector = static_cast<int>(std::floor((cw + 15.0) / 30.0)) % 12;
  return table[sector];
}

std::optional<int> bfs_steps(const OccupancyGrid& grid, Cell start, Cell goal) {
  if (!grid.passable(start) || !grid.passable(goal)) return std::nullopt;
  std::vector<int> dist(static_cast<std::size_t>(grid.width * grid.height), -1);
  std::deque<Cell> queue{start};
  dist[grid.index(start)] = 0;
  while (!queue.empty()) {
    const Cell cur = queue.front();
    queue.pop_front();
    if (cur == goal) return dist[grid.index(cur)];
    const Cell next[4] = {{cur.row + 1, cur.col}, {cur.row - 1, cur.col}, {cur.row, cur.col + 1}, {cur.row, cur.col - 1}};
    for (const Cell n : next) {
      if (grid.passable(n) && dist[grid.index(n)] < 0) {
        dist[grid.index(n)] = dist[grid.index(cur)] + 1;
        queue.push_back(n);
      }
    }
  }
  return std::nullopt;
}

std::string action_name(double t) {
  if (t > -45.0 && t < 45.0) return "move_forward";
  if (t >= 45.0 && t < 135.0) return "turn_left";
  if (t > -135.0 && t <= -45.0) return "turn_right";
  return "move_backward";
}

}  // namespace situgen::oracle
