#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace situgen {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec2 xy() const { return {x, y}; }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend bool operator==(Vec3, Vec3) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline double norm(Vec3 a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

/// Counter-clockwise rotation by `angle` radians.
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Heading of `v` in radians, CCW from +x, in [0, 2pi).
double heading_of(Vec2 v);

/// Wraps to [0, 2pi).
double wrap_two_pi(double angle);

/// Wraps to (-pi, pi].
double wrap_pi(double angle);

inline double to_degrees(double rad) { return rad * 180.0 / kPi; }
inline double to_radians(double deg) { return deg * kPi / 180.0; }

/// Degrees as written to files: rounded to 1e-9 deg so a load/save cycle is
/// byte-stable.
double file_degrees(double rad);

/// Inverse of `file_degrees`, wrapped to [0, 2pi).
double file_radians(double deg);

/// 2D rigid motion p -> R(angle) p + offset.
struct Rigid2 {
  double angle = 0.0;
  Vec2 offset{};

  Vec2 apply(Vec2 p) const { return rotate(p, angle) + offset; }
  Vec2 apply_direction(Vec2 d) const { return rotate(d, angle); }
  Rigid2 inverse() const { return {-angle, rotate(-offset, -angle)}; }
};

/// Axis-aligned rectangle.
struct Rect {
  Vec2 min{};
  Vec2 max{};

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double area() const { return width() * height(); }
  Rect inflated(double margin) const {
    return {{min.x - margin, min.y - margin}, {max.x + margin, max.y + margin}};
  }
  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

/// Area of the intersection of two rectangles (0 if disjoint).
double overlap_area(const Rect& a, const Rect& b);

/// Oriented rectangle in the XY plane.
struct Footprint {
  Vec2 center{};
  Vec2 half{};     // half extents along the local axes
  double yaw = 0;  // local x axis heading

  bool contains(Vec2 p) const;
  /// Euclidean distance from `p` to the closed rectangle (0 inside).
  double distance(Vec2 p) const;
  Rect bounds() const;
  std::array<Vec2, 4> corners() const;
};

/// Distance from `p` to segment [a, b] and the clamped projection parameter.
struct SegmentProjection {
  double distance;
  double t;  // unclamped parameter along a->b
};
SegmentProjection project_onto_segment(Vec2 p, Vec2 a, Vec2 b);

// Polygon helpers. Polygons are closed implicitly (last vertex connects to first).
double signed_area(std::span<const Vec2> polygon);
bool point_in_polygon(std::span<const Vec2> polygon, Vec2 p);
bool polygon_is_simple(std::span<const Vec2> polygon);
Rect polygon_bounds(std::span<const Vec2> polygon);

}  // namespace situgen
