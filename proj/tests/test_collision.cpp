#include <doctest.h>

#include <numbers>
#include <vector>

#include "cbf_shield/collision.hpp"
#include "test_support.hpp"

using namespace cbf_shield;

namespace {

std::vector<Vec2> boundary_points(const BoundingBox& box, int count) {
  const auto c = box.corners();
  std::vector<Vec2> pts;
  const int per_edge = count / 4;
  for (int e = 0; e < 4; ++e) {
    const Vec2 p0 = c[e];
    const Vec2 p1 = c[(e + 1) % 4];
    for (int i = 0; i < per_edge; ++i) pts.push_back(p0 + (p1 - p0) * (double(i) / per_edge));
  }
  return pts;
}

// Two rectangles overlap iff a boundary point of one lies in the other or
// one contains the other entirely (caught by the centre test).
bool sampled_overlap(const BoundingBox& a, const BoundingBox& b, double tol) {
  if (a.contains(b.center(), tol) || b.contains(a.center(), tol)) return true;
  for (const Vec2 p : boundary_points(b, 10000)) {
    if (a.contains(p, tol)) return true;
  }
  for (const Vec2 p : boundary_points(a, 10000)) {
    if (b.contains(p, tol)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("disjoint distant boxes do not collide") {
  const auto r = detect_collision({0, 0, 4, 2, 0}, {50, 0, 4, 2, 0.3});
  CHECK_FALSE(r.overlap);
  CHECK(r.penetration == 0.0);
}

TEST_CASE("identical boxes penetrate by the short side") {
  const BoundingBox box{3, -1, 4.5, 1.8, 0.7};
  const auto r = detect_collision(box, box);
  CHECK(r.overlap);
  CHECK(r.penetration == doctest::Approx(1.8));
}

TEST_CASE("axis-aligned overlap depth and direction") {
  const auto r = detect_collision({0, 0, 4, 2, 0}, {3.5, 0, 4, 2, 0});
  CHECK(r.overlap);
  CHECK(r.penetration == doctest::Approx(0.5));
  CHECK(r.axis.x == doctest::Approx(1.0));
  const auto back = detect_collision({3.5, 0, 4, 2, 0}, {0, 0, 4, 2, 0});
  CHECK(back.axis.x == doctest::Approx(-1.0));
}

TEST_CASE("45 degree corner touching an edge matches the sampling oracle") {
  const BoundingBox a{0, 0, 4, 2, 0};
  // square of side 2 turned by 45 degrees: its corner reaches sqrt(2) from its centre
  const double touch = 2.0 + std::numbers::sqrt2;
  for (const double offset : {-1e-3, -1e-4, 1e-4, 1e-3}) {
    const BoundingBox b{touch + offset, 0.3, 2, 2, std::numbers::pi / 4.0};
    const bool sat = detect_collision(a, b).overlap;
    CHECK(sat == (offset < 0.0));
    CHECK(sat == sampled_overlap(a, b, 0.0));
  }
  CHECK(detect_collision(a, {touch, 0.3, 2, 2, std::numbers::pi / 4.0}).overlap);
}

TEST_CASE("random pairs agree with the sampling oracle") {
  test_support::Rng rng(7);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const BoundingBox a{0, 0, rng.uniform(1, 6), rng.uniform(0.5, 3), rng.uniform(-3.2, 3.2)};
    const BoundingBox b{rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(1, 6), rng.uniform(0.5, 3),
                        rng.uniform(-3.2, 3.2)};
    const auto r = detect_collision(a, b);
    // skip near-tangent cases the sampling resolution cannot decide
    if (r.overlap && r.penetration < 0.01) continue;
    if (!r.overlap && detect_collision(a.inflated(0.01), b).overlap) continue;
    CHECK(r.overlap == sampled_overlap(a, b, 0.0));
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("collision is symmetric and translating by the axis separates") {
  test_support::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const BoundingBox a{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(1, 5), rng.uniform(0.5, 2),
                        rng.uniform(-3, 3)};
    BoundingBox b{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(1, 5), rng.uniform(0.5, 2),
                  rng.uniform(-3, 3)};
    const auto ab = detect_collision(a, b);
    const auto ba = detect_collision(b, a);
    CHECK(ab.overlap == ba.overlap);
    if (!ab.overlap) continue;
    CHECK(ab.penetration == doctest::Approx(ba.penetration));
    b.x += ab.axis.x * (ab.penetration + 1e-6);
    b.y += ab.axis.y * (ab.penetration + 1e-6);
    CHECK_FALSE(detect_collision(a, b).overlap);
  }
}
