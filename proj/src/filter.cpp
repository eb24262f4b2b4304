#include "cbf_shield/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "cbf_shield/errors.hpp"

namespace cbf_shield {

void validate(const FilterConfig& config) {
  if (!is_valid(config.barrier)) throw std::invalid_argument("invalid barrier parameters");
  if (!is_valid(config.limits)) throw std::invalid_argument("invalid control limits");
  if (!is_valid(config.geometry)) throw std::invalid_argument("invalid vehicle geometry");
  if (!config.q.positive_definite()) throw std::invalid_argument("Q must be positive definite");
  if (!(config.risk_radius > 0.0)) throw std::invalid_argument("risk_radius must be positive");
}

std::vector<ObstacleState> select_risky_obstacles(const VehicleState& ego,
                                                  std::span<const ObstacleState> obstacles,
                                                  const FilterConfig& config) {
  std::vector<ObstacleState> out;
  for (const auto& ob : obstacles) {
    if (norm(ob.position() - ego.position()) <= config.risk_radius) {
      out.push_back(ob);
      continue;
    }
    try {
      if (eval_h(ego, ob, config.geometry, config.barrier) < config.h_activation) out.push_back(ob);
    } catch (const CoincidentCentersError&) {
      out.push_back(ob);
    }
  }
  return out;
}

SafetyFilter::SafetyFilter(FilterConfig config) : config_(std::move(config)) { validate(config_); }

ConstraintSet SafetyFilter::constraint_rows(const VehicleState& ego,
                                            std::span<const ObstacleState> obstacles,
                                            const OccupancyGrid* grid,
                                            const RoadModel& road) const {
  ConstraintSet set;
  std::ostringstream notes;

  std::vector<ObstacleState> all(obstacles.begin(), obstacles.end());
  if (grid != nullptr) {
    std::vector<BoundingBox> boxes;
    boxes.reserve(obstacles.size());
    for (const auto& ob : obstacles) boxes.push_back(ob.box);
    set.supplementary = convert(*grid, boxes, config_.perception);
    int next_id = -1;
    // The grid carries no motion, so supplementary obstacles are static.
    for (const auto& box : set.supplementary) all.push_back({box, 0.0, 0.0, 0.0, next_id--});
  }

  const auto& geom = config_.geometry;
  const auto& params = config_.barrier;
  for (const auto& ob : select_risky_obstacles(ego, all, config_)) {
    try {
      const auto value = eval_barrier(ego, ob, geom, params);
      const auto feas = eval_feasibility(ego, ob, geom, params, config_.limits);
      set.obstacles.push_back({ob.id, value.h, feas.h_f, ob.id < 0});
      if (value.h < 0.0) {
        set.in_collision = true;
        notes << "obstacle " << ob.id << " inside safety ellipse (h=" << value.h << "); ";
      }
      set.rows.push_back(obstacle_constraint_row(ego, ob, geom, params));
      set.rows.push_back(feasibility_constraint_row(ego, ob, geom, params, config_.limits));
    } catch (const CoincidentCentersError&) {
      set.in_collision = true;
      set.obstacles.push_back({ob.id, -params.c_safe, -params.c_safe, ob.id < 0});
      notes << "obstacle " << ob.id << " centre coincides with ego; ";
    }
  }

  if (config_.road_constraints) {
    const auto proj = project_to_frenet(ego, road);
    set.frenet = proj;
    if (proj.ambiguous) notes << "ambiguous road projection; ";
    try {
      const auto [lower, upper] =
          road_constraint_rows(proj.state, proj.kappa, road.d_min(), road.d_max(), geom, params);
      set.rows.push_back(lower);
      set.rows.push_back(upper);
    } catch (const SingularFrenetError&) {
      notes << "road rows skipped: singular Frenet configuration; ";
    }
  }
  set.notes = notes.str();
  return set;
}

namespace {

// Steer in [lo, hi] maximising min_i rows[i](a, steer) / scale[i]. The
// minimum of affine functions is concave, so the maximum sits at an end
// point or at a crossing of two rows; ties go to the steer nearest `prefer`.
double max_min_steer(const std::vector<const ConstraintRow*>& rows,
                     const std::vector<double>& scale, double a, double lo, double hi,
                     double prefer) {
  const auto value = [&](std::size_t i, double s) { return rows[i]->evaluate({a, s}) / scale[i]; };
  std::vector<double> candidates{lo, hi};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const double ki = rows[i]->c_steer / scale[i];
      const double kj = rows[j]->c_steer / scale[j];
      if (ki == kj) continue;
      const double s = (value(j, 0.0) - value(i, 0.0)) / (ki - kj);
      if (s > lo && s < hi) candidates.push_back(s);
    }
  double best_s = std::clamp(prefer, lo, hi);
  double best_val = -std::numeric_limits<double>::infinity();
  for (const double s : candidates) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) worst = std::min(worst, value(i, s));
    if (worst > best_val ||
        (worst == best_val && std::abs(s - prefer) < std::abs(best_s - prefer))) {
      best_val = worst;
      best_s = s;
    }
  }
  return best_s;
}

}  // namespace

ControlInput SafetyFilter::fallback_control(const ConstraintSet& set, ControlInput u_o) const {
  const auto& lim = config_.limits;
  const double a = lim.a_min;
  std::vector<const ConstraintRow*> road, obstacle;
  for (const auto& r : set.rows) {
    if (r.tag.kind == ConstraintKind::road_lower || r.tag.kind == ConstraintKind::road_upper)
      road.push_back(&r);
    else
      obstacle.push_back(&r);
  }
  const double steer_o = std::clamp(u_o.steer, lim.steer_min, lim.steer_max);

  // Steering interval keeping every road row nonnegative under full braking.
  double lo = lim.steer_min;
  double hi = lim.steer_max;
  bool satisfiable = true;
  for (const auto* r : road) {
    const double k = r->c_a * a + r->b;
    if (r->c_steer > 0.0)
      lo = std::max(lo, -k / r->c_steer);
    else if (r->c_steer < 0.0)
      hi = std::min(hi, -k / r->c_steer);
    else if (k < 0.0)
      satisfiable = false;
  }

  if (!satisfiable || lo > hi) {
    // Off the road envelope: recover the most violated boundary first.
    return {a, max_min_steer(road, std::vector<double>(road.size(), 1.0), a, lim.steer_min,
                             lim.steer_max, steer_o)};
  }
  if (obstacle.empty()) return {a, std::clamp(steer_o, lo, hi)};
  // Inside the envelope: least violation of the obstacle rows, each measured
  // as a signed distance in control space.
  std::vector<double> scale;
  for (const auto* r : obstacle) scale.push_back(std::max(std::hypot(r->c_a, r->c_steer), 1e-12));
  return {a, max_min_steer(obstacle, scale, a, lo, hi, steer_o)};
}

RevisionResult SafetyFilter::revise(const VehicleState& ego,
                                    std::span<const ObstacleState> obstacles,
                                    const OccupancyGrid* grid, const RoadModel& road,
                                    ControlInput u_o) const {
  const ControlInput request = config_.limits.clamp(u_o);
  const ConstraintSet set = constraint_rows(ego, obstacles, grid, road);

  RevisionResult result;
  result.obstacles = set.obstacles;
  result.supplementary = set.supplementary;
  result.in_collision = set.in_collision;
  result.diagnostics = set.notes;

  bool use_fallback = set.in_collision;
  if (!use_fallback) {
    const QpSolution sol = solve({config_.q, request, set.rows, config_.limits});
    if (sol.status == QpStatus::optimal) {
      // Guard against candidate round-off pushing a hair past the box.
      result.u = config_.limits.clamp(sol.u);
      result.active = sol.active_set;
    } else {
      use_fallback = true;
      result.diagnostics += "QP infeasible; ";
      for (const auto& r : set.rows)
        spdlog::debug("  row {}: {:.6g} a + {:.6g} steer + {:.6g} >= 0", to_string(r.tag), r.c_a,
                      r.c_steer, r.b);
    }
  }
  if (use_fallback) {
    result.status = RevisionStatus::fallback;
    result.u = fallback_control(set, request);
    spdlog::debug("fallback control a={} steer={} ({})", result.u.a, result.u.steer,
                  result.diagnostics);
  }
  result.revised =
      std::abs(result.u.a - u_o.a) > 1e-9 || std::abs(result.u.steer - u_o.steer) > 1e-9;
  return result;
}

RevisionResult revise(const VehicleState& ego, std::span<const ObstacleState> obstacles,
                      const OccupancyGrid* grid, const RoadModel& road, ControlInput u_o,
                      const FilterConfig& config) {
  return SafetyFilter(config).revise(ego, obstacles, grid, road, u_o);
}

}  // namespace cbf_shield
