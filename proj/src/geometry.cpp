#include "cbf_shield/geometry.hpp"

namespace cbf_shield {

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

double normalize_orientation(double angle) {
  constexpr double pi = std::numbers::pi;
  double a = std::fmod(angle + pi / 2.0, pi);
  if (a < 0.0) a += pi;
  a -= pi / 2.0;
  // fmod can land exactly on the excluded upper end after the shift back.
  if (a >= pi / 2.0) a -= pi;
  return a;
}

std::array<Vec2, 4> BoundingBox::corners() const {
  const Vec2 c = center();
  const Vec2 ax = axis() * (0.5 * l);
  const Vec2 lat = perp(axis()) * (0.5 * w);
  return {c - ax - lat, c + ax - lat, c + ax + lat, c - ax + lat};
}

bool BoundingBox::contains(Vec2 p, double tol) const {
  const Vec2 rel = p - center();
  const Vec2 ax = axis();
  return std::abs(dot(rel, ax)) <= 0.5 * l + tol &&
         std::abs(dot(rel, perp(ax))) <= 0.5 * w + tol;
}

bool is_valid(const BoundingBox& box) {
  return std::isfinite(box.x) && std::isfinite(box.y) && std::isfinite(box.theta) &&
         box.l > 0.0 && box.w > 0.0 && std::isfinite(box.l) && std::isfinite(box.w);
}

}  // namespace cbf_shield
