#pragma once

#include <string>
#include <vector>

#include "cbf_shield/scenario.hpp"

namespace cbf_shield {

/// Every object the engine tracks (background vehicles and static objects).
struct ObjectInfo {
  int id = 0;
  double length = 0.0;
  double width = 0.0;
  bool perceived = true;
  bool is_static = false;
};

struct ObjectRecord {
  BoundingBox box;
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;
  double s = 0.0;
  double d = 0.0;
  /// Barrier value seen from the ego, using the filter's parameters.
  double h = 0.0;
};

struct TickRecord {
  double t = 0.0;
  VehicleState ego;
  FrenetState frenet;
  ControlInput u_o;
  ControlInput u;
  bool revised = false;
  bool fallback = false;
  std::vector<ConstraintTag> active;
  /// Parallel to SimulationTrace::objects.
  std::vector<ObjectRecord> objects;
  std::size_t supplementary_boxes = 0;
};

struct CollisionEvent {
  std::size_t tick = 0;
  double t = 0.0;
  int object_id = 0;
  double penetration = 0.0;
};

struct SimulationTrace {
  std::string scenario;
  AblationMode mode = AblationMode::full;
  std::uint64_t seed = 0;
  double dt = 0.0;
  VehicleGeometry ego_geometry;
  std::vector<ObjectInfo> objects;
  std::vector<TickRecord> ticks;
  /// First tick of every contiguous overlap episode.
  std::vector<CollisionEvent> collisions;
  /// Largest number of supplementary boxes produced by a single revision.
  std::size_t max_supplementary_boxes = 0;
};

/// Runs the closed loop for spec.sim.duration. Validates the spec before
/// tick 0 (std::invalid_argument).
SimulationTrace run_scenario(const ScenarioSpec& spec);
/// Same with an explicit seed and mode, leaving spec.sim untouched.
SimulationTrace run_scenario(const ScenarioSpec& spec, std::uint64_t seed, AblationMode mode);

/// First tick of every contiguous ego/object overlap episode in the trace.
std::vector<CollisionEvent> detect_collisions(const SimulationTrace& trace);

/// Naive planner command for the current ego state.
ControlInput plan(const VehicleState& ego, const FrenetState& frenet, const RoadModel& road,
                  const PlannerParams& planner, const VehicleGeometry& geom);

/// Ego body rectangle at its mass centre.
BoundingBox ego_box(const VehicleState& ego, const VehicleGeometry& geom);

/// Ego is at fault when it hits with its front face and the other object
/// did not move laterally towards it by more than kLateralEntry metres in
/// the second before impact.
bool classify_fault(const SimulationTrace& trace, const CollisionEvent& event);

inline constexpr double kFaultWindow = 1.0;
inline constexpr double kLateralEntry = 0.3;

}  // namespace cbf_shield
