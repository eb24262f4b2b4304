#include "cbf_shield/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "cbf_shield/collision.hpp"
#include "cbf_shield/errors.hpp"

namespace cbf_shield {

BoundingBox ego_box(const VehicleState& ego, const VehicleGeometry& geom) {
  return {ego.x, ego.y, geom.body_length, geom.body_width, ego.phi};
}

ControlInput plan(const VehicleState& ego, const FrenetState& frenet, const RoadModel& road,
                  const PlannerParams& planner, const VehicleGeometry& geom) {
  const double lookahead =
      std::max(planner.lookahead_min, planner.lookahead_gain * std::abs(ego.v));
  const RoadPoint target = road.at(frenet.s + lookahead, planner.lane_offset);
  const Vec2 rel = target.position - ego.position();
  const double dist = std::max(norm(rel), 1e-6);
  const double alpha = std::atan2(rel.y, rel.x) - ego.phi;
  return {planner.speed_gain * (planner.target_speed - ego.v),
          2.0 * geom.wheelbase * std::sin(alpha) / dist};
}

namespace {

struct ScriptState {
  BackgroundVehicle spec;
  double s = 0.0;
  double d = 0.0;
  double v = 0.0;
  double d_initial = 0.0;
  bool lon_fired = false;
  bool lat_fired = false;
};

double merge_offset(const LateralScript& lat, double d0, double s) {
  if (lat.s_end <= lat.s_start) return s >= lat.s_start ? lat.d_target : d0;
  const double tau = std::clamp((s - lat.s_start) / (lat.s_end - lat.s_start), 0.0, 1.0);
  return d0 + (lat.d_target - d0) * 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
}

double merge_slope(const LateralScript& lat, double d0, double s) {
  if (lat.s_end <= lat.s_start || s <= lat.s_start || s >= lat.s_end) return 0.0;
  const double span = lat.s_end - lat.s_start;
  const double tau = (s - lat.s_start) / span;
  return (lat.d_target - d0) * 0.5 * std::numbers::pi * std::sin(std::numbers::pi * tau) / span;
}

// Lateral rate the script is commanding at the current state.
double lateral_rate(const ScriptState& st) {
  const auto& lat = st.spec.lateral;
  switch (lat.kind) {
    case LateralScript::Kind::keep:
      return 0.0;
    case LateralScript::Kind::lane_change: {
      if (!st.lat_fired) return 0.0;
      const double remaining = lat.d_target - st.d;
      if (std::abs(remaining) < 1e-12) return 0.0;
      return std::copysign(lat.lat_speed, remaining);
    }
    case LateralScript::Kind::merge:
      return merge_slope(lat, st.d_initial, st.s) * st.v;
  }
  return 0.0;
}

ObjectRecord vehicle_record(const ScriptState& st, const RoadModel& road) {
  const RoadPoint p = road.at(st.s, st.d);
  const double along = st.v * (1.0 - st.d * p.kappa);
  const double lateral = lateral_rate(st);
  const Vec2 t = unit_from_angle(p.heading);
  const Vec2 vel = t * along + perp(t) * lateral;
  const double heading =
      std::abs(along) + std::abs(lateral) > 1e-9 ? std::atan2(vel.y, vel.x) : p.heading;
  ObjectRecord rec;
  rec.box = {p.position.x, p.position.y, st.spec.length, st.spec.width, heading};
  rec.vx = vel.x;
  rec.vy = vel.y;
  rec.s = st.s;
  rec.d = st.d;
  return rec;
}

void advance_script(ScriptState& st, double t, double ego_s, double dt) {
  const double gap = st.s - ego_s;
  auto& lon = st.spec.longitudinal;
  auto& lat = st.spec.lateral;
  if (!st.lon_fired && lon.kind != LongitudinalScript::Kind::constant && lon.trigger.fires(t, gap))
    st.lon_fired = true;
  if (!st.lat_fired && lat.kind == LateralScript::Kind::lane_change && lat.trigger.fires(t, gap))
    st.lat_fired = true;

  const double d_rate = lateral_rate(st);
  if (st.lon_fired) {
    if (lon.kind == LongitudinalScript::Kind::brake)
      st.v = std::max(lon.v_final, st.v - lon.accel * dt);
    else if (lon.kind == LongitudinalScript::Kind::accelerate)
      st.v = std::min(lon.v_final, st.v + lon.accel * dt);
  }
  st.s += st.v * dt;

  switch (lat.kind) {
    case LateralScript::Kind::keep:
      break;
    case LateralScript::Kind::lane_change:
      if (st.lat_fired) {
        const double step_d = d_rate * dt;
        const double remaining = lat.d_target - st.d;
        st.d = std::abs(step_d) >= std::abs(remaining) ? lat.d_target : st.d + step_d;
      }
      break;
    case LateralScript::Kind::merge:
      st.d = merge_offset(lat, st.d_initial, st.s);
      break;
  }
}

ObstacleState as_obstacle(const ObjectRecord& rec, int id) {
  return {rec.box, rec.vx, rec.vy, rec.yaw_rate, id};
}

double safe_h(const VehicleState& ego, const BoundingBox& box, const FilterConfig& cfg) {
  try {
    return eval_h(ego, ObstacleState{box, 0.0, 0.0, 0.0, 0}, cfg.geometry, cfg.barrier);
  } catch (const CoincidentCentersError&) {
    return -cfg.barrier.c_safe;
  }
}

}  // namespace

SimulationTrace run_scenario(const ScenarioSpec& spec) {
  return run_scenario(spec, spec.sim.seed, spec.sim.mode);
}

SimulationTrace run_scenario(const ScenarioSpec& spec, std::uint64_t seed, AblationMode mode) {
  validate(spec);
  const RoadModel road = spec.road.build();

  FilterConfig cfg = spec.filter;
  cfg.geometry = spec.ego.geometry;
  cfg.road_constraints = mode == AblationMode::full;
  const SafetyFilter filter(cfg);

  SimulationTrace trace;
  trace.scenario = spec.name;
  trace.mode = mode;
  trace.seed = seed;
  trace.dt = spec.sim.dt;
  trace.ego_geometry = spec.ego.geometry;

  std::vector<ScriptState> scripts;
  for (const auto& v : materialize_vehicles(spec, seed)) {
    scripts.push_back({v, v.s, v.d, v.v, v.d, false, false});
    trace.objects.push_back({v.id, v.length, v.width, v.perceived, false});
  }
  std::vector<ObjectRecord> statics;
  for (const auto& o : spec.statics) {
    const RoadPoint p = road.at(o.s, o.d);
    ObjectRecord rec;
    rec.box = {p.position.x, p.position.y, o.length, o.width,
               normalize_angle(p.heading + o.heading)};
    rec.s = o.s;
    rec.d = o.d;
    statics.push_back(rec);
    trace.objects.push_back({o.id, o.length, o.width, o.perceived, true});
  }

  std::optional<OccupancyGrid> grid;
  if (spec.ogm && spec.ogm->enabled && mode != AblationMode::none) {
    grid = spec.ogm->grid;
    if (spec.ogm->rasterize_unperceived) {
      std::vector<BoundingBox> shapes;
      for (const auto& s : statics) shapes.push_back(s.box);
      rasterize(*grid, shapes);
    }
  }

  VehicleState ego = road.to_cartesian(spec.ego.initial);
  const auto n_ticks = static_cast<std::size_t>(std::llround(spec.sim.duration / spec.sim.dt));
  trace.ticks.reserve(n_ticks);

  for (std::size_t k = 0; k < n_ticks; ++k) {
    TickRecord tick;
    tick.t = static_cast<double>(k) * spec.sim.dt;
    tick.ego = ego;
    const FrenetProjection proj = project_to_frenet(ego, road);
    tick.frenet = proj.state;

    for (const auto& st : scripts) {
      ObjectRecord rec = vehicle_record(st, road);
      // Heading rate from a one-step lookahead of the script.
      ScriptState next = st;
      advance_script(next, tick.t, proj.state.s, spec.sim.dt);
      rec.yaw_rate =
          normalize_angle(vehicle_record(next, road).box.theta - rec.box.theta) / spec.sim.dt;
      tick.objects.push_back(rec);
    }
    for (const auto& s : statics) tick.objects.push_back(s);
    for (auto& rec : tick.objects) rec.h = safe_h(ego, rec.box, cfg);

    std::vector<ObstacleState> perceived;
    for (std::size_t i = 0; i < tick.objects.size(); ++i)
      if (trace.objects[i].perceived)
        perceived.push_back(as_obstacle(tick.objects[i], trace.objects[i].id));

    tick.u_o = plan(ego, proj.state, road, spec.planner, spec.ego.geometry);
    if (mode == AblationMode::none) {
      tick.u = cfg.limits.clamp(tick.u_o);
    } else {
      const auto res = filter.revise(ego, perceived, grid ? &*grid : nullptr, road, tick.u_o);
      tick.u = res.u;
      tick.fallback = res.status == RevisionStatus::fallback;
      tick.active = res.active;
      tick.supplementary_boxes = res.supplementary.size();
      trace.max_supplementary_boxes = std::max(trace.max_supplementary_boxes, res.supplementary.size());
    }
    tick.revised =
        std::abs(tick.u.a - tick.u_o.a) > 1e-9 || std::abs(tick.u.steer - tick.u_o.steer) > 1e-9;

    // Brakes stop the car within the step; they do not reverse it.
    ControlInput applied = tick.u;
    if (ego.v >= 0.0) applied.a = std::max(applied.a, -ego.v / spec.sim.dt);
    ego = step(ego, applied, spec.ego.geometry, spec.sim.dt);
    for (auto& st : scripts) advance_script(st, tick.t, proj.state.s, spec.sim.dt);
    trace.ticks.push_back(std::move(tick));
  }

  trace.collisions = detect_collisions(trace);
  for (const auto& ev : trace.collisions)
    spdlog::info("{}: collision with object {} at t={:.2f}", spec.name, ev.object_id, ev.t);
  return trace;
}

std::vector<CollisionEvent> detect_collisions(const SimulationTrace& trace) {
  std::vector<CollisionEvent> events;
  std::vector<bool> overlapping(trace.objects.size(), false);
  for (std::size_t k = 0; k < trace.ticks.size(); ++k) {
    const TickRecord& tick = trace.ticks[k];
    const BoundingBox body = ego_box(tick.ego, trace.ego_geometry);
    for (std::size_t i = 0; i < tick.objects.size() && i < overlapping.size(); ++i) {
      const auto hit = detect_collision(body, tick.objects[i].box);
      if (hit.overlap && !overlapping[i])
        events.push_back({k, tick.t, trace.objects[i].id, hit.penetration});
      overlapping[i] = hit.overlap;
    }
  }
  return events;
}

bool classify_fault(const SimulationTrace& trace, const CollisionEvent& event) {
  const auto obj = std::find_if(trace.objects.begin(), trace.objects.end(),
                                [&](const ObjectInfo& o) { return o.id == event.object_id; });
  if (obj == trace.objects.end() || event.tick >= trace.ticks.size()) return false;
  const auto idx = static_cast<std::size_t>(std::distance(trace.objects.begin(), obj));

  const TickRecord& impact = trace.ticks[event.tick];
  const VehicleState& ego = impact.ego;
  const BoundingBox& other = impact.objects[idx].box;

  // Contact face: which side of the ego's Minkowski-expanded rectangle the
  // other centre lies beyond, measured in normalised ego-frame coordinates.
  const Vec2 rel_w = other.center() - ego.position();
  const double c = std::cos(ego.phi), s = std::sin(ego.phi);
  const Vec2 rel{c * rel_w.x + s * rel_w.y, -s * rel_w.x + c * rel_w.y};
  const double dtheta = other.theta - ego.phi;
  const double ext_lon = 0.5 * (other.l * std::abs(std::cos(dtheta)) + other.w * std::abs(std::sin(dtheta)));
  const double ext_lat = 0.5 * (other.l * std::abs(std::sin(dtheta)) + other.w * std::abs(std::cos(dtheta)));
  const double half_lon = 0.5 * trace.ego_geometry.body_length + ext_lon;
  const double half_lat = 0.5 * trace.ego_geometry.body_width + ext_lat;
  const bool front_face = rel.x > 0.0 && rel.x / half_lon >= std::abs(rel.y) / half_lat;
  if (!front_face) return false;

  const auto back = static_cast<std::size_t>(std::llround(kFaultWindow / trace.dt));
  const std::size_t start = event.tick > back ? event.tick - back : 0;
  const TickRecord& before = trace.ticks[start];
  const double d_other_0 = before.objects[idx].d;
  const double d_other_1 = impact.objects[idx].d;
  const double d_ego_0 = before.frenet.d;
  const double towards = d_ego_0 >= d_other_0 ? 1.0 : -1.0;
  const bool entered = towards * (d_other_1 - d_other_0) > kLateralEntry;
  return !entered;
}

}  // namespace cbf_shield
