#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbf_shield/filter.hpp"
#include "cbf_shield/perception.hpp"
#include "cbf_shield/road.hpp"

namespace cbf_shield {

enum class AblationMode { none, obstacles_only, full };

std::string_view to_string(AblationMode mode);
/// Throws std::invalid_argument on an unknown name.
AblationMode parse_mode(std::string_view name);

struct RoadSpec {
  std::vector<Vec2> centerline;
  double d_min = -1.75;
  double d_max = 1.75;

  RoadModel build() const { return RoadModel(centerline, d_min, d_max); }
};

/// Pure pursuit on the lane-offset path plus proportional speed hold. It
/// ignores every obstacle.
struct PlannerParams {
  double target_speed = 15.0;
  double speed_gain = 0.8;
  double lookahead_min = 6.0;
  double lookahead_gain = 0.6;
  double lane_offset = 0.0;
};

struct EgoSpec {
  FrenetState initial{10.0, 0.0, 15.0, 0.0};
  VehicleGeometry geometry;
};

/// Starts on time or when the ego comes within `trigger_gap` metres
/// (arc length, ego behind the vehicle), whichever happens first.
struct Trigger {
  std::optional<double> time;
  std::optional<double> gap;

  bool fires(double t, double gap_to_ego) const {
    return (time && t >= *time) || (gap && gap_to_ego >= 0.0 && gap_to_ego <= *gap);
  }
};

struct LongitudinalScript {
  enum class Kind { constant, brake, accelerate } kind = Kind::constant;
  Trigger trigger;
  /// Magnitude in m/s^2 (brake slows down, accelerate speeds up).
  double accel = 0.0;
  /// Speed the manoeuvre stops at.
  double v_final = 0.0;
};

struct LateralScript {
  enum class Kind { keep, lane_change, merge } kind = Kind::keep;
  Trigger trigger;
  double d_target = 0.0;
  /// Lane change ramp rate (m/s).
  double lat_speed = 1.0;
  /// Merge blends d from its initial value to d_target over [s_start, s_end].
  double s_start = 0.0;
  double s_end = 0.0;
};

struct BackgroundVehicle {
  int id = 1;
  double length = 4.5;
  double width = 1.8;
  double s = 0.0;
  double d = 0.0;
  double v = 0.0;
  bool perceived = true;
  LongitudinalScript longitudinal;
  LateralScript lateral;
};

/// Fixed object placed in road coordinates; heading relative to the tangent.
struct StaticObject {
  int id = 100;
  double s = 0.0;
  double d = 0.0;
  double length = 1.0;
  double width = 1.0;
  double heading = 0.0;
  bool perceived = true;
};

/// Seeded aggressive traffic. Every seed deterministically yields the same
/// vehicle list.
struct TrafficSpec {
  int count = 0;
  std::vector<double> lanes;
  double s_ahead_min = 15.0;
  double s_ahead_max = 250.0;
  double s_behind = 40.0;
  double min_spacing = 14.0;
  double speed_min = 10.0;
  double speed_max = 18.0;
  double cut_in_probability = 0.5;
  double brake_probability = 0.5;
  double decel_min = 3.0;
  double decel_max = 6.0;
  double brake_time_min = 2.0;
  double brake_time_max = 40.0;
  double cut_gap_min = 6.0;
  double cut_gap_max = 16.0;
  double lat_speed_min = 0.8;
  double lat_speed_max = 2.0;
  /// Every variant gets a braking lead in the ego lane within this range.
  bool lead_brake = true;
  double lead_gap_min = 25.0;
  double lead_gap_max = 40.0;
};

struct OgmSpec {
  bool enabled = true;
  /// Either a fixed grid, or an empty grid over which unperceived static
  /// objects are rasterised when the scenario starts.
  OccupancyGrid grid;
  bool rasterize_unperceived = false;
};

struct SimSpec {
  double duration = 10.0;
  double dt = 0.02;
  std::uint64_t seed = 1;
  AblationMode mode = AblationMode::full;
};

struct ScenarioSpec {
  std::string name = "scenario";
  RoadSpec road;
  EgoSpec ego;
  PlannerParams planner;
  std::vector<BackgroundVehicle> vehicles;
  std::vector<StaticObject> statics;
  std::optional<TrafficSpec> traffic;
  std::optional<OgmSpec> ogm;
  SimSpec sim;
  FilterConfig filter;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const ScenarioSpec& spec);

/// Scripted vehicles plus the generated traffic for `seed`.
std::vector<BackgroundVehicle> materialize_vehicles(const ScenarioSpec& spec, std::uint64_t seed);

/// JSON scenario. Relative file references resolve against `base_dir`.
/// Throws ParseError with a 1-based line number.
ScenarioSpec parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioSpec load_scenario(const std::filesystem::path& path);

}  // namespace cbf_shield
