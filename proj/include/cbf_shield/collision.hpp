#pragma once

#include "cbf_shield/geometry.hpp"

namespace cbf_shield {

struct CollisionResult {
  bool overlap = false;
  /// Minimal translation distance separating the boxes; 0 when disjoint.
  double penetration = 0.0;
  /// Unit axis of minimal overlap, pointing from `a` towards `b`.
  Vec2 axis{};
};

/// Separating-axis test over the four edge normals of two rectangles.
/// Touching boxes (zero-measure contact) count as overlapping.
CollisionResult detect_collision(const BoundingBox& a, const BoundingBox& b);

}  // namespace cbf_shield
