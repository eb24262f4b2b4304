#pragma once

#include <string>
#include <utility>

#include "cbf_shield/geometry.hpp"
#include "cbf_shield/road.hpp"
#include "cbf_shield/vehicle_model.hpp"

namespace cbf_shield {

/// Obstacle pose and planar velocity. The barrier predicts the obstacle on
/// a constant-speed turn at `yaw_rate` (zero: straight line); its box
/// orientation is held fixed.
struct ObstacleState {
  BoundingBox box;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  int id = 0;

  Vec2 position() const { return box.center(); }
  Vec2 velocity() const { return {vx, vy}; }
};

struct BarrierParams {
  double c_safe = 1.0;
  double lon_margin = 2.0;
  double lat_margin = 0.8;
  double alpha1 = 1.2;
  double alpha2 = 1.2;
  double beta = 1.0;
  double gamma = 3.0;
  /// Evaluate the ellipse in a frame frozen at the current ego heading, so
  /// steering does not rotate the barrier. When false the frame turns with
  /// the ego and its rotation enters the steering coefficient.
  bool heading_frozen = true;
};

bool is_valid(const BarrierParams& params);

enum class ConstraintKind { obstacle, feasibility, road_lower, road_upper, limit };

struct ConstraintTag {
  ConstraintKind kind = ConstraintKind::obstacle;
  /// Obstacle id for obstacle/feasibility rows, 0..3 for limit rows.
  int id = 0;

  bool operator==(const ConstraintTag&) const = default;
};

std::string to_string(const ConstraintTag& tag);

/// c_a * a + c_steer * steer + b >= 0.
struct ConstraintRow {
  double c_a = 0.0;
  double c_steer = 0.0;
  double b = 0.0;
  ConstraintTag tag;

  double evaluate(ControlInput u) const { return c_a * u.a + c_steer * u.steer + b; }
};

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;
};

struct SafetyCoefficients {
  double l_lon = 0.0;
  double l_lat = 0.0;
};

/// Ellipse frame used to evaluate h: its heading and semi-axis scales.
struct EllipseFrame {
  double heading = 0.0;
  SafetyCoefficients coeffs;
  double c_safe = 1.0;
};

/// Obstacle centre in the ego frame (x forward, y left).
LonLat lon_lat_distance(const VehicleState& ego, const ObstacleState& ob);

/// Half-extents of both bodies projected on the ego axes, plus margins.
SafetyCoefficients safety_coefficients(const VehicleGeometry& ego_geom, const ObstacleState& ob,
                                       const VehicleState& ego, const BarrierParams& params);

EllipseFrame make_frame(const VehicleState& ego, const ObstacleState& ob,
                        const VehicleGeometry& geom, const BarrierParams& params);

/// h = sqrt(d_lon^2 / l_lon^2 + d_lat^2 / l_lat^2) - c_safe.
/// Throws CoincidentCentersError when the centres coincide.
double eval_h(const VehicleState& ego, const ObstacleState& ob, const VehicleGeometry& geom,
              const BarrierParams& params);
double eval_h(Vec2 ego_position, Vec2 obstacle_position, const EllipseFrame& frame);

/// Partial derivatives of h with the frame coefficients held fixed. `phi`
/// is zero in the frozen frame; in the rotating frame it is the frame term.
struct BarrierGradient {
  double ego_x = 0.0;
  double ego_y = 0.0;
  double phi = 0.0;
  double ob_x = 0.0;
  double ob_y = 0.0;
};

BarrierGradient barrier_gradient(const VehicleState& ego, const ObstacleState& ob,
                                 const VehicleGeometry& geom, const BarrierParams& params);

/// h and its drift derivative (ego drift plus obstacle motion, no control).
struct BarrierValue {
  double h = 0.0;
  double h_dot = 0.0;
};

BarrierValue eval_barrier(const VehicleState& ego, const ObstacleState& ob,
                          const VehicleGeometry& geom, const BarrierParams& params);

/// Second-order moving-obstacle condition
///   h'' + (alpha1 + alpha2) h' + alpha1 alpha2 h >= 0
/// in affine form; h'' is taken along the ego model with the obstacle on
/// its constant-speed turn.
ConstraintRow obstacle_constraint_row(const VehicleState& ego, const ObstacleState& ob,
                                      const VehicleGeometry& geom, const BarrierParams& params);

struct FeasibilityValue {
  double h_f = 0.0;
  /// Branch that attained the maximum: (a_max, 0) unless (a_min, 0) is
  /// strictly better.
  ControlInput u_star;
};

FeasibilityValue eval_feasibility(const VehicleState& ego, const ObstacleState& ob,
                                  const VehicleGeometry& geom, const BarrierParams& params,
                                  const ControlLimits& limits);

/// max over {(a_min, 0), (a_max, 0)} of the obstacle row.
double feasibility_barrier(const VehicleState& ego, const ObstacleState& ob,
                           const VehicleGeometry& geom, const BarrierParams& params,
                           const ControlLimits& limits);

/// First-order condition h_F' + beta h_F >= 0 with the active branch of
/// the maximum frozen at the evaluation point.
ConstraintRow feasibility_constraint_row(const VehicleState& ego, const ObstacleState& ob,
                                         const VehicleGeometry& geom, const BarrierParams& params,
                                         const ControlLimits& limits);

/// Rows for h_lower = d - d_min and h_upper = d_max - d under the Frenet
/// model, second order with gain gamma. Throws SingularFrenetError when
/// 1 - d*kappa <= 0.
std::pair<ConstraintRow, ConstraintRow> road_constraint_rows(const FrenetState& fs,
                                                             const RoadModel& road,
                                                             const VehicleGeometry& geom,
                                                             const BarrierParams& params);
/// Same with an explicit curvature (e.g. from a projection).
std::pair<ConstraintRow, ConstraintRow> road_constraint_rows(const FrenetState& fs, double kappa,
                                                             double d_min, double d_max,
                                                             const VehicleGeometry& geom,
                                                             const BarrierParams& params);

}  // namespace cbf_shield
