#include "situgen/geometry.hpp"

#include <algorithm>
#include <limits>

namespace situgen {

double wrap_two_pi(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) {
    a += kTwoPi;
  }
  if (a >= kTwoPi) {
    a = 0.0;
  }
  return a;
}

double wrap_pi(double angle) {
  double a = wrap_two_pi(angle);
  if (a > kPi) {
    a -= kTwoPi;
  }
  return a;
}

double heading_of(Vec2 v) { return wrap_two_pi(std::atan2(v.y, v.x)); }

double file_degrees(double rad) {
  const double deg = to_degrees(wrap_two_pi(rad));
  const double rounded = std::round(deg * 1e9) / 1e9;
  return rounded >= 360.0 ? 0.0 : rounded;
}

double file_radians(double deg) { return wrap_two_pi(to_radians(deg)); }

double overlap_area(const Rect& a, const Rect& b) {
  const double w = std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x);
  const double h = std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y);
  if (w <= 0.0 || h <= 0.0) {
    return 0.0;
  }
  return w * h;
}

namespace {

Vec2 to_local(const Footprint& f, Vec2 p) { return rotate(p - f.center, -f.yaw); }

}  // namespace

bool Footprint::contains(Vec2 p) const {
  const Vec2 q = yaw == 0.0 ? p - center : to_local(*this, p);
  return std::abs(q.x) <= half.x && std::abs(q.y) <= half.y;
}

double Footprint::distance(Vec2 p) const {
  const Vec2 q = yaw == 0.0 ? p - center : to_local(*this, p);
  const double dx = std::max(std::abs(q.x) - half.x, 0.0);
  const double dy = std::max(std::abs(q.y) - half.y, 0.0);
  return std::hypot(dx, dy);
}

std::array<Vec2, 4> Footprint::corners() const {
  const std::array<Vec2, 4> local = {Vec2{-half.x, -half.y}, Vec2{half.x, -half.y},
                                     Vec2{half.x, half.y}, Vec2{-half.x, half.y}};
  std::array<Vec2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = (yaw == 0.0 ? local[i] : rotate(local[i], yaw)) + center;
  }
  return out;
}

Rect Footprint::bounds() const {
  if (yaw == 0.0) {
    return {center - half, center + half};
  }
  Rect r{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
         {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const Vec2 c : corners()) {
    r.min.x = std::min(r.min.x, c.x);
    r.min.y = std::min(r.min.y, c.y);
    r.max.x = std::max(r.max.x, c.x);
    r.max.y = std::max(r.max.y, c.y);
  }
  return r;
}

SegmentProjection project_onto_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) {
    return {distance(p, a), 0.0};
  }
  const double t = dot(p - a, ab) / len2;
  const double clamped = std::clamp(t, 0.0, 1.0);
  return {distance(p, a + ab * clamped), t};
}

double signed_area(std::span<const Vec2> polygon) {
  double twice = 0.0;
  for (std::size_t i = 0, n = polygon.size(); i < n; ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % n]);
  }
  return 0.5 * twice;
}

bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p) {
  bool inside = false;
  for (std::size_t i = 0, n = polygon.size(), j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) {
        inside = !inside;
      }
    }
  }
  return inside;
}

namespace {

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool polygon_is_simple(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) {
    return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a1 = polygon[i];
    const Vec2 a2 = polygon[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Adjacent edges share a vertex by construction.
      if (j == i + 1 || (i == 0 && j == n - 1)) {
        continue;
      }
      if (segments_intersect(a1, a2, polygon[j], polygon[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

Rect polygon_bounds(std::span<const Vec2> polygon) {
  Rect r{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
         {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const Vec2 p : polygon) {
    r.min.x = std::min(r.min.x, p.x);
    r.min.y = std::min(r.min.y, p.y);
    r.max.x = std::max(r.max.x, p.x);
    r.max.y = std::max(r.max.y, p.y);
  }
  return r;
}

}  // namespace situgen
