#include "cbf_shield/collision.hpp"

#include <limits>

namespace cbf_shield {

namespace {

// Half-length of the projection of a box on a unit axis.
double projected_radius(const BoundingBox& box, Vec2 axis) {
  const Vec2 ax = box.axis();
  return 0.5 * box.l * std::abs(dot(ax, axis)) + 0.5 * box.w * std::abs(dot(perp(ax), axis));
}

}  // namespace

CollisionResult detect_collision(const BoundingBox& a, const BoundingBox& b) {
  const Vec2 delta = b.center() - a.center();
  const std::array<Vec2, 4> axes{a.axis(), perp(a.axis()), b.axis(), perp(b.axis())};

  CollisionResult result;
  result.penetration = std::numeric_limits<double>::infinity();
  for (const Vec2 axis : axes) {
    const double gap = std::abs(dot(delta, axis));
    const double overlap = projected_radius(a, axis) + projected_radius(b, axis) - gap;
    if (overlap < 0.0) return {};
    if (overlap < result.penetration) {
      result.penetration = overlap;
      result.axis = dot(delta, axis) >= 0.0 ? axis : -axis;
    }
  }
  result.overlap = true;
  return result;
}

}  // namespace cbf_shield
