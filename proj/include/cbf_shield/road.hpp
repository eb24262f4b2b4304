#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cbf_shield/geometry.hpp"
#include "cbf_shield/vehicle_model.hpp"

namespace cbf_shield {

/// Result of projecting a pose onto the centreline.
struct FrenetProjection {
  FrenetState state;
  /// Curvature interpolated at the foot point.
  double kappa = 0.0;
  std::size_t segment = 0;
  /// Another non-adjacent segment was equally close; the smallest s won.
  bool ambiguous = false;
};

/// Point on the centreline (or offset from it).
struct RoadPoint {
  Vec2 position;
  double heading = 0.0;
  double kappa = 0.0;
};

/// Polyline centreline with cumulative arc length, three-point curvature
/// and signed lateral bounds d_min < 0 < d_max on the reference-point offset.
class RoadModel {
 public:
  /// Throws std::invalid_argument when fewer than two waypoints are given,
  /// s does not strictly increase, the bounds are not d_min < 0 < d_max, or
  /// |kappa| * max(|d_min|, d_max) >= 1 somewhere.
  RoadModel(std::vector<Vec2> waypoints, double d_min, double d_max);

  std::span<const Vec2> waypoints() const { return waypoints_; }
  std::span<const double> arc_length() const { return s_; }
  std::span<const double> curvature() const { return kappa_; }
  double length() const { return s_.back(); }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }

  /// Closest-segment projection; d positive left of travel direction.
  FrenetProjection project(Vec2 position, double heading = 0.0, double speed = 0.0) const;

  /// Point at arc length s (clamped to the road) shifted laterally by d.
  RoadPoint at(double s, double d = 0.0) const;

  /// Inverse of project for poses whose foot point lies inside a segment.
  VehicleState to_cartesian(const FrenetState& fs) const;

 private:
  std::size_t segment_for(double s) const;

  std::vector<Vec2> waypoints_;
  std::vector<double> s_;
  std::vector<double> kappa_;
  double d_min_;
  double d_max_;
};

FrenetProjection project_to_frenet(const VehicleState& state, const RoadModel& road);

/// Signed curvature of the circle through three points (left turn > 0).
double circumscribed_curvature(Vec2 a, Vec2 b, Vec2 c);

/// Piece of a centreline: straight run or circular arc.
struct RoadSegmentSpec {
  double length = 0.0;
  /// Zero for straight runs; positive turns left.
  double curvature = 0.0;
};

/// Samples straight/arc pieces at roughly `spacing` metres.
std::vector<Vec2> sample_centerline(Vec2 start, double heading,
                                    std::span<const RoadSegmentSpec> pieces, double spacing);

}  // namespace cbf_shield
