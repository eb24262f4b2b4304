#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbf_shield/barrier.hpp"
#include "cbf_shield/perception.hpp"
#include "cbf_shield/qp.hpp"
#include "cbf_shield/road.hpp"

namespace cbf_shield {

enum class FallbackPolicy {
  /// Full braking. Steer stays inside the road rows and otherwise least
  /// violates the obstacle rows; off the road envelope it maximises the
  /// worst road row.
  brake_road_aware,
};

struct FilterConfig {
  BarrierParams barrier;
  ControlLimits limits;
  VehicleGeometry geometry;
  Weight2 q;
  PerceptionConfig perception;
  /// Obstacles whose centre lies within this distance are constrained.
  double risk_radius = 30.0;
  /// Obstacles outside risk_radius are still constrained while h is below this.
  double h_activation = 2.0;
  /// Disable to run obstacle rows only.
  bool road_constraints = true;
  FallbackPolicy fallback = FallbackPolicy::brake_road_aware;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const FilterConfig& config);

enum class RevisionStatus { optimal, fallback };

struct ObstacleDiagnostics {
  int id = 0;
  double h = 0.0;
  double h_f = 0.0;
  bool supplementary = false;
};

struct RevisionResult {
  ControlInput u;
  bool revised = false;
  RevisionStatus status = RevisionStatus::optimal;
  std::vector<ConstraintTag> active;
  /// Risky obstacles only, in gating order.
  std::vector<ObstacleDiagnostics> obstacles;
  /// Boxes synthesised from the occupancy grid this call.
  std::vector<BoundingBox> supplementary;
  bool in_collision = false;
  std::string diagnostics;
};

/// Rows handed to the QP, before box limits are appended.
struct ConstraintSet {
  std::vector<ConstraintRow> rows;
  std::vector<ObstacleDiagnostics> obstacles;
  std::vector<BoundingBox> supplementary;
  std::optional<FrenetProjection> frenet;
  bool in_collision = false;
  std::string notes;
};

std::vector<ObstacleState> select_risky_obstacles(const VehicleState& ego,
                                                  std::span<const ObstacleState> obstacles,
                                                  const FilterConfig& config);

/// Safety filter over the kinematic ego model. Holds only immutable
/// configuration; every call is reentrant.
class SafetyFilter {
 public:
  explicit SafetyFilter(FilterConfig config);

  const FilterConfig& config() const { return config_; }

  RevisionResult revise(const VehicleState& ego, std::span<const ObstacleState> obstacles,
                        const OccupancyGrid* grid, const RoadModel& road, ControlInput u_o) const;

  /// Every row revise() would build for this input, for debugging.
  ConstraintSet constraint_rows(const VehicleState& ego, std::span<const ObstacleState> obstacles,
                                const OccupancyGrid* grid, const RoadModel& road) const;

 private:
  ControlInput fallback_control(const ConstraintSet& set, ControlInput u_o) const;

  FilterConfig config_;
};

/// Convenience wrapper around SafetyFilter::revise.
RevisionResult revise(const VehicleState& ego, std::span<const ObstacleState> obstacles,
                      const OccupancyGrid* grid, const RoadModel& road, ControlInput u_o,
                      const FilterConfig& config);

}  // namespace cbf_shield
