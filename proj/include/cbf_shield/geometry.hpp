#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace cbf_shield {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Counter-clockwise quarter turn.
constexpr Vec2 perp(Vec2 v) { return {-v.y, v.x}; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 unit_from_angle(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Wraps to (-pi, pi].
double normalize_angle(double angle);

/// Wraps an orientation with period pi to [-pi/2, pi/2).
double normalize_orientation(double angle);

/// Oriented rectangle: centre, length along `theta`, width across it.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double l = 1.0;
  double w = 1.0;
  double theta = 0.0;

  Vec2 center() const { return {x, y}; }
  Vec2 axis() const { return unit_from_angle(theta); }
  double area() const { return l * w; }

  /// Corners in counter-clockwise order starting at rear-right.
  std::array<Vec2, 4> corners() const;

  /// Inclusive containment with absolute tolerance `tol`.
  bool contains(Vec2 p, double tol = 1e-9) const;

  BoundingBox inflated(double margin) const {
    return {x, y, l + 2.0 * margin, w + 2.0 * margin, theta};
  }

  bool operator==(const BoundingBox&) const = default;
};

bool is_valid(const BoundingBox& box);

}  // namespace cbf_shield
