#include "cbf_shield/road.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbf_shield {

double circumscribed_curvature(Vec2 a, Vec2 b, Vec2 c) {
  const double denom = norm(b - a) * norm(c - b) * norm(c - a);
  if (denom == 0.0) return 0.0;
  return 2.0 * cross(b - a, c - b) / denom;
}

RoadModel::RoadModel(std::vector<Vec2> waypoints, double d_min, double d_max)
    : waypoints_(std::move(waypoints)), d_min_(d_min), d_max_(d_max) {
  if (waypoints_.size() < 2) throw std::invalid_argument("road needs at least two waypoints");
  if (!(d_min_ < 0.0 && d_max_ > 0.0))
    throw std::invalid_argument("road bounds must satisfy d_min < 0 < d_max");

  const std::size_t n = waypoints_.size();
  s_.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double len = norm(waypoints_[i] - waypoints_[i - 1]);
    if (!(len > 0.0)) throw std::invalid_argument("road waypoints must strictly increase in s");
    s_[i] = s_[i - 1] + len;
  }

  kappa_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i)
    kappa_[i] = circumscribed_curvature(waypoints_[i - 1], waypoints_[i], waypoints_[i + 1]);
  if (n >= 3) {
    kappa_.front() = kappa_[1];
    kappa_.back() = kappa_[n - 2];
  }

  const double reach = std::max(-d_min_, d_max_);
  for (const double k : kappa_)
    if (std::abs(k) * reach >= 1.0)
      throw std::invalid_argument("road curvature too tight for its lateral bounds");
}

std::size_t RoadModel::segment_for(double s) const {
  const auto it = std::upper_bound(s_.begin(), s_.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(s_.begin(), it));
  return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, s_.size() - 2);
}

FrenetProjection RoadModel::project(Vec2 p, double heading, double speed) const {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_seg = 0;
  double best_t = 0.0;
  for (std::size_t i = 0; i + 1 < waypoints_.size(); ++i) {
    const Vec2 a = waypoints_[i];
    const Vec2 seg = waypoints_[i + 1] - a;
    const double t = std::clamp(dot(p - a, seg) / dot(seg, seg), 0.0, 1.0);
    const Vec2 diff = p - (a + seg * t);
    const double dist = dot(diff, diff);
    if (dist < best) {
      best = dist;
      best_seg = i;
      best_t = t;
    }
  }

  // A tie with a non-neighbouring segment means the pose sits on a medial
  // axis of the centreline.
  bool ambiguous = false;
  const double tie_tol = 1e-9 * std::max(1.0, best);
  for (std::size_t i = 0; i + 1 < waypoints_.size() && !ambiguous; ++i) {
    if (i + 1 >= best_seg && i <= best_seg + 1) continue;
    const Vec2 a = waypoints_[i];
    const Vec2 seg = waypoints_[i + 1] - a;
    const double t = std::clamp(dot(p - a, seg) / dot(seg, seg), 0.0, 1.0);
    const Vec2 diff = p - (a + seg * t);
    if (dot(diff, diff) - best <= tie_tol) ambiguous = true;
  }

  const Vec2 a = waypoints_[best_seg];
  const Vec2 seg = waypoints_[best_seg + 1] - a;
  const double len = s_[best_seg + 1] - s_[best_seg];
  const Vec2 tangent = seg * (1.0 / len);
  const Vec2 foot = a + seg * best_t;

  FrenetProjection out;
  out.segment = best_seg;
  out.ambiguous = ambiguous;
  out.state.s = s_[best_seg] + best_t * len;
  const double side = cross(tangent, p - foot);
  out.state.d = std::copysign(std::sqrt(best), side == 0.0 ? 1.0 : side);
  out.state.v = speed;
  out.state.mu = normalize_angle(heading - std::atan2(tangent.y, tangent.x));
  out.kappa = kappa_[best_seg] + best_t * (kappa_[best_seg + 1] - kappa_[best_seg]);
  return out;
}

RoadPoint RoadModel::at(double s, double d) const {
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_for(s);
  const double len = s_[i + 1] - s_[i];
  const double t = (s - s_[i]) / len;
  const Vec2 seg = waypoints_[i + 1] - waypoints_[i];
  const Vec2 tangent = seg * (1.0 / len);
  return {waypoints_[i] + seg * t + perp(tangent) * d, std::atan2(tangent.y, tangent.x),
          kappa_[i] + t * (kappa_[i + 1] - kappa_[i])};
}

VehicleState RoadModel::to_cartesian(const FrenetState& fs) const {
  const RoadPoint p = at(fs.s, fs.d);
  return {p.position.x, p.position.y, fs.v, normalize_angle(p.heading + fs.mu)};
}

FrenetProjection project_to_frenet(const VehicleState& state, const RoadModel& road) {
  return road.project(state.position(), state.phi, state.v);
}

std::vector<Vec2> sample_centerline(Vec2 start, double heading,
                                    std::span<const RoadSegmentSpec> pieces, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("centreline spacing must be positive");
  std::vector<Vec2> pts{start};
  Vec2 p = start;
  double h = heading;
  for (const auto& piece : pieces) {
    if (!(piece.length > 0.0)) throw std::invalid_argument("road piece length must be positive");
    const int n = std::max(1, static_cast<int>(std::ceil(piece.length / spacing - 1e-9)));
    const double ds = piece.length / n;
    const Vec2 p0 = p;
    const double h0 = h;
    for (int i = 1; i <= n; ++i) {
      const double s = ds * i;
      if (piece.curvature == 0.0) {
        p = p0 + unit_from_angle(h0) * s;
      } else {
        const double k = piece.curvature;
        const double dh = k * s;
        p = p0 + Vec2{(std::sin(h0 + dh) - std::sin(h0)) / k, (std::cos(h0) - std::cos(h0 + dh)) / k};
      }
      pts.push_back(p);
    }
    h = h0 + piece.curvature * piece.length;
  }
  return pts;
}

}  // namespace cbf_shield
