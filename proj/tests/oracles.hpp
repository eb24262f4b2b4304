#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance gate. Nothing here calls into the code it checks except for
// plain evaluation helpers (eval_h style queries and the RK4 step).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "cbf_shield/barrier.hpp"
#include "cbf_shield/filter.hpp"
#include "cbf_shield/qp.hpp"
#include "test_support.hpp"

namespace oracle {

using namespace cbf_shield;

inline double rel_err(double analytic, double reference, double floor = 1.0) {
  return std::abs(analytic - reference) / std::max({std::abs(analytic), std::abs(reference), floor});
}

// ---------------------------------------------------------------- geometry

/// Every point inside or on the CCW hull, every vertex an input point that
/// attains the support function in some direction of a fine angular sweep.
inline bool hull_ok(std::span<const Vec2> points, std::span<const Vec2> hull) {
  if (hull.size() < 3) return false;
  double scale = 1.0;
  for (const Vec2 p : points) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  const double tol = 1e-9 * scale;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i];
    const Vec2 b = hull[(i + 1) % hull.size()];
    const Vec2 u = (b - a) * (1.0 / norm(b - a));
    for (const Vec2 p : points)
      if (cross(u, p - a) < -tol) return false;
    // no retained collinear vertex
    const Vec2 c = hull[(i + 2) % hull.size()];
    if (std::abs(cross(b - a, c - b)) <= 1e-12 * norm(b - a) * norm(c - b)) return false;
  }
  for (const Vec2 v : hull) {
    if (std::find(points.begin(), points.end(), v) == points.end()) return false;
  }
  std::vector<bool> extremal(hull.size(), false);
  constexpr int kDirections = 7200;
  for (int k = 0; k < kDirections; ++k) {
    const double ang = 2.0 * std::numbers::pi * k / kDirections;
    const Vec2 dir{std::cos(ang), std::sin(ang)};
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2 p : points) best = std::max(best, dot(p, dir));
    for (std::size_t i = 0; i < hull.size(); ++i)
      if (dot(hull[i], dir) >= best - 1e-12 * scale) extremal[i] = true;
  }
  // Vertices with an exterior angle below the sweep step get one more
  // witness: the bisector of their two edge normals.
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (extremal[i]) continue;
    const Vec2 prev = hull[(i + hull.size() - 1) % hull.size()];
    const Vec2 next = hull[(i + 1) % hull.size()];
    const Vec2 n1 = -perp((hull[i] - prev) * (1.0 / norm(hull[i] - prev)));
    const Vec2 n2 = -perp((next - hull[i]) * (1.0 / norm(next - hull[i])));
    const Vec2 dir = n1 + n2;
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2 p : points) best = std::max(best, dot(p, dir));
    extremal[i] = dot(hull[i], dir) >= best - 1e-12 * scale;
  }
  return std::all_of(extremal.begin(), extremal.end(), [](bool e) { return e; });
}

/// Smallest axis-aligned bounding area over rotations in [0, 90) degrees:
/// a uniform sweep, then golden-section refinement around the best step.
inline double sweep_min_area(std::span<const Vec2> points, double step_deg = 0.01) {
  const auto area = [&](double ang) {
    const Vec2 u{std::cos(ang), std::sin(ang)};
    const Vec2 v = perp(u);
    double ulo = std::numeric_limits<double>::infinity(), uhi = -ulo, vlo = ulo, vhi = -ulo;
    for (const Vec2 p : points) {
      ulo = std::min(ulo, dot(p, u));
      uhi = std::max(uhi, dot(p, u));
      vlo = std::min(vlo, dot(p, v));
      vhi = std::max(vhi, dot(p, v));
    }
    return (uhi - ulo) * (vhi - vlo);
  };
  const double step = step_deg * std::numbers::pi / 180.0;
  const int steps = static_cast<int>(std::lround(90.0 / step_deg));
  double best = std::numeric_limits<double>::infinity(), best_ang = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double a = area(k * step);
    if (a < best) best = a, best_ang = k * step;
  }
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = best_ang - step, hi = best_ang + step;
  for (int it = 0; it < 60; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (area(m1) < area(m2)) hi = m2; else lo = m1;
  }
  return std::min(best, area(0.5 * (lo + hi)));
}

inline std::vector<Vec2> random_points(test_support::Rng& rng, int n, double spread) {
  std::vector<Vec2> pts;
  const double cx = rng.uniform(-50, 50), cy = rng.uniform(-50, 50);
  const double stretch = rng.uniform(0.2, 1.0), turn = rng.uniform(-3.2, 3.2);
  for (int i = 0; i < n; ++i) {
    const Vec2 local{rng.uniform(-spread, spread), stretch * rng.uniform(-spread, spread)};
    const Vec2 ax = unit_from_angle(turn);
    pts.push_back(Vec2{cx, cy} + ax * local.x + perp(ax) * local.y);
  }
  return pts;
}

// ---------------------------------------------------------------- barrier

/// Obstacle centre and velocity after `t` seconds on its constant-speed turn.
inline ObstacleState advance(const ObstacleState& ob, double t) {
  const double w = ob.yaw_rate;
  const Vec2 v0 = ob.velocity();
  const double sw = std::abs(w) > 1e-12 ? std::sin(w * t) / w : t;
  const double cw = std::abs(w) > 1e-12 ? (1.0 - std::cos(w * t)) / w : 0.5 * w * t * t;
  const Vec2 p = ob.position() + v0 * sw + perp(v0) * cw;
  const Vec2 v = v0 * std::cos(w * t) + perp(v0) * std::sin(w * t);
  ObstacleState out = ob;
  out.box.x = p.x;
  out.box.y = p.y;
  out.vx = v.x;
  out.vy = v.y;
  return out;
}

inline double h_in_frame(Vec2 ego, Vec2 obstacle, double frame_heading, SafetyCoefficients k,
                         double c_safe) {
  const Vec2 r = obstacle - ego;
  const double c = std::cos(frame_heading), s = std::sin(frame_heading);
  const double lon = c * r.x + s * r.y, lat = -s * r.x + c * r.y;
  return std::sqrt(lon * lon / (k.l_lon * k.l_lon) + lat * lat / (k.l_lat * k.l_lat)) - c_safe;
}

// Five-point stencils.
template <class F>
double d1(F f, double eps) {
  return (f(-2 * eps) - 8 * f(-eps) + 8 * f(eps) - f(2 * eps)) / (12 * eps);
}
template <class F>
double d2(F f, double eps) {
  return (-f(-2 * eps) + 16 * f(-eps) - 30 * f(0.0) + 16 * f(eps) - f(2 * eps)) / (12 * eps * eps);
}

struct BarrierCase {
  VehicleState ego;
  ObstacleState ob;
  VehicleGeometry geom;
  BarrierParams params;
  ControlLimits limits;
  ControlInput u;
};

inline BarrierCase random_barrier_case(test_support::Rng& rng) {
  BarrierCase c;
  c.geom.wheelbase = rng.uniform(2.4, 3.2);
  c.geom.body_length = rng.uniform(3.8, 5.2);
  c.geom.body_width = rng.uniform(1.6, 2.1);
  c.ego = {rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0.5, 25), rng.uniform(-3.1, 3.1)};
  const double dist = rng.uniform(6, 45), bearing = rng.uniform(-3.1, 3.1);
  const Vec2 p = c.ego.position() + unit_from_angle(bearing) * dist;
  const double speed = rng.uniform(0, 25), course = rng.uniform(-3.1, 3.1);
  c.ob.box = {p.x, p.y, rng.uniform(1, 12), rng.uniform(0.3, 2.6), rng.uniform(-3.1, 3.1)};
  c.ob.vx = speed * std::cos(course);
  c.ob.vy = speed * std::sin(course);
  c.ob.yaw_rate = rng.chance(0.5) ? rng.uniform(-0.4, 0.4) : 0.0;
  c.ob.id = 7;
  c.params.c_safe = rng.uniform(1.0, 1.5);
  c.params.lon_margin = rng.uniform(0, 3);
  c.params.lat_margin = rng.uniform(0, 1.5);
  c.params.alpha1 = rng.uniform(0.3, 3);
  c.params.alpha2 = rng.uniform(0.3, 3);
  c.params.beta = rng.uniform(0.3, 3);
  c.params.heading_frozen = rng.chance(0.5);
  c.u = {rng.uniform(c.limits.a_min, c.limits.a_max), rng.uniform(c.limits.steer_min, c.limits.steer_max)};
  return c;
}

/// Worst relative error of every analytic barrier derivative against
/// finite differences for one configuration.
struct BarrierCheck {
  double h = 0.0;
  double gradient = 0.0;
  double h_dot = 0.0;
  double obstacle_row = 0.0;
  double feasibility_value = 0.0;
  double feasibility_row = 0.0;
  double affine = 0.0;
  double worst() const {
    return std::max({gradient, h_dot, obstacle_row, feasibility_value, feasibility_row, affine});
  }
};

inline BarrierCheck check_barrier(const BarrierCase& c) {
  const auto& p = c.params;
  const double k1 = p.alpha1 + p.alpha2, k0 = p.alpha1 * p.alpha2;
  const SafetyCoefficients k0s = safety_coefficients(c.geom, c.ob, c.ego, p);
  const double phi0 = c.ego.phi;
  BarrierCheck out;
  out.h = h_in_frame(c.ego.position(), c.ob.position(), phi0, k0s, p.c_safe);

  // Closed-loop state at time t (ego under u, obstacle on its turn).
  const auto ego_at = [&](double t) { return t == 0.0 ? c.ego : step(c.ego, c.u, c.geom, t); };
  const auto frame_at = [&](const VehicleState& e) { return p.heading_frozen ? phi0 : e.phi; };

  // h along a straight constant-acceleration ego path with the frame held.
  const auto h_along = [&](const VehicleState& e, const ObstacleState& ob, double frame,
                           double a_star) {
    return [=, &p, &k0s](double tau) {
      const Vec2 pe = e.position() + unit_from_angle(e.phi) * (e.v * tau + 0.5 * a_star * tau * tau);
      return h_in_frame(pe, advance(ob, tau).position(), frame, k0s, p.c_safe);
    };
  };
  // B(x, (a*, 0) | h) in a frame held at `frame`.
  const auto b_oracle = [&](const VehicleState& e, const ObstacleState& ob, double frame,
                            double a_star) {
    const auto f = h_along(e, ob, frame, a_star);
    return d2(f, 3e-3) + k1 * d1(f, 3e-3) + k0 * f(0.0);
  };

  // gradient with coefficients held (rotate the obstacle box with phi)
  {
    const auto g = barrier_gradient(c.ego, c.ob, c.geom, p);
    const double eps = 1e-5;
    const auto h_of = [&](VehicleState e, ObstacleState ob) {
      ob.box.theta += e.phi - phi0;
      return eval_h(e, ob, c.geom, p);
    };
    const auto fd = [&](auto mutate) {
      VehicleState ep = c.ego, em = c.ego;
      ObstacleState op = c.ob, om = c.ob;
      mutate(ep, op, eps);
      mutate(em, om, -eps);
      return (h_of(ep, op) - h_of(em, om)) / (2 * eps);
    };
    double worst = 0.0;
    worst = std::max(worst, rel_err(g.ego_x, fd([](auto& e, auto&, double s) { e.x += s; })));
    worst = std::max(worst, rel_err(g.ego_y, fd([](auto& e, auto&, double s) { e.y += s; })));
    worst = std::max(worst, rel_err(g.ob_x, fd([](auto&, auto& o, double s) { o.box.x += s; })));
    worst = std::max(worst, rel_err(g.ob_y, fd([](auto&, auto& o, double s) { o.box.y += s; })));
    if (!p.heading_frozen)
      worst = std::max(worst, rel_err(g.phi, fd([](auto& e, auto&, double s) { e.phi += s; })));
    out.gradient = worst;
  }

  // h_dot: drift derivative with the frame held at the current heading
  const double h_dot_fd = d1(h_along(c.ego, c.ob, phi0, 0.0), 3e-3);
  out.h_dot = rel_err(eval_barrier(c.ego, c.ob, c.geom, p).h_dot, h_dot_fd);

  // obstacle row
  const ConstraintRow row = obstacle_constraint_row(c.ego, c.ob, c.geom, p);
  {
    double b_fd = 0.0;
    if (p.heading_frozen) {
      const auto f = [&](double t) {
        return h_in_frame(ego_at(t).position(), advance(c.ob, t).position(), phi0, k0s, p.c_safe);
      };
      b_fd = d2(f, 3e-3) + k1 * d1(f, 3e-3) + k0 * f(0.0);
    } else {
      // d/dt of the drift derivative taken in the frame that turns with the ego
      const auto drift = [&](double t) {
        const VehicleState e = ego_at(t);
        return d1(h_along(e, advance(c.ob, t), e.phi, 0.0), 3e-3);
      };
      b_fd = d1(drift, 1e-3) + k1 * drift(0.0) + k0 * out.h;
    }
    out.obstacle_row = rel_err(row.evaluate(c.u), b_fd);
  }

  // feasibility value and row (branch frozen at t = 0)
  {
    const auto fv = eval_feasibility(c.ego, c.ob, c.geom, p, c.limits);
    const double hi = b_oracle(c.ego, c.ob, phi0, c.limits.a_max);
    const double lo = b_oracle(c.ego, c.ob, phi0, c.limits.a_min);
    out.feasibility_value = rel_err(fv.h_f, std::max(hi, lo));
    const double a_star = fv.u_star.a;
    const auto hf = [&](double t) {
      const VehicleState e = ego_at(t);
      return b_oracle(e, advance(c.ob, t), frame_at(e), a_star);
    };
    const double row_fd = d1(hf, 1e-3) + p.beta * hf(0.0);
    const auto frow = feasibility_constraint_row(c.ego, c.ob, c.geom, p, c.limits);
    out.feasibility_row = rel_err(frow.evaluate(c.u), row_fd);
  }

  // exact affinity of the row in u
  {
    const ControlInput u1{c.limits.a_min, c.limits.steer_max}, u2{c.limits.a_max, c.limits.steer_min};
    const double lam = 0.37;
    const ControlInput mid{lam * u1.a + (1 - lam) * u2.a, lam * u1.steer + (1 - lam) * u2.steer};
    out.affine = rel_err(row.evaluate(mid), lam * row.evaluate(u1) + (1 - lam) * row.evaluate(u2), 1.0);
  }
  return out;
}

/// Worst relative error of both road rows against a finite-difference
/// second derivative of d along the Frenet flow, for one random state.
inline double road_rows_error(test_support::Rng& rng) {
  const VehicleGeometry g;
  BarrierParams p;
  p.gamma = rng.uniform(0.5, 4);
  const double kappa = rng.uniform(-0.02, 0.02);
  const FrenetState fs{0, rng.uniform(-2, 2), rng.uniform(1, 25), rng.uniform(-0.4, 0.4)};
  const ControlInput u{rng.uniform(-6, 3), rng.uniform(-0.4, 0.4)};
  const auto [lo, hi] = road_constraint_rows(fs, kappa, -3.5, 3.5, g, p);
  const auto d_of = [&](double t) { return t == 0.0 ? fs.d : step_frenet(fs, u, kappa, g, t).d; };
  const double dd = d2(d_of, 1e-3);
  const double dv = d1(d_of, 1e-3);
  const double lo_fd = dd + 2 * p.gamma * dv + p.gamma * p.gamma * (fs.d + 3.5);
  const double hi_fd = -dd - 2 * p.gamma * dv + p.gamma * p.gamma * (3.5 - fs.d);
  return std::max(rel_err(lo.evaluate(u), lo_fd), rel_err(hi.evaluate(u), hi_fd));
}

// ---------------------------------------------------------------- qp

inline QpProblem random_qp(test_support::Rng& rng, int n_rows) {
  QpProblem p;
  p.limits = {rng.uniform(-8, -1), rng.uniform(0.5, 3), rng.uniform(-0.6, -0.1), rng.uniform(0.1, 0.6)};
  const double aa = rng.uniform(0.5, 3), ss = rng.uniform(0.5, 12);
  const double as = rng.uniform(-0.9, 0.9) * std::sqrt(aa * ss);
  p.q = {aa, as, ss};
  p.u_o = {rng.uniform(-10, 5), rng.uniform(-1, 1)};
  // Every row keeps a random interior point feasible.
  const ControlInput anchor{rng.uniform(p.limits.a_min, p.limits.a_max),
                            rng.uniform(p.limits.steer_min, p.limits.steer_max)};
  for (int i = 0; i < n_rows; ++i) {
    ConstraintRow r;
    r.c_a = rng.uniform(-1, 1);
    r.c_steer = rng.uniform(-10, 10);
    r.b = -r.c_a * anchor.a - r.c_steer * anchor.steer + rng.uniform(0, 1.5);
    r.tag = {ConstraintKind::obstacle, i};
    p.rows.push_back(r);
  }
  return p;
}

inline bool feasible(const QpProblem& p, ControlInput u) {
  if (!p.limits.contains(u)) return false;
  return std::all_of(p.rows.begin(), p.rows.end(), [u](const ConstraintRow& r) { return r.evaluate(u) >= 0.0; });
}

/// Dense grid at 1e-2 over the box for a strictly feasible start, then a
/// log-barrier Newton refinement (an interior-point method, unrelated to
/// the solver's candidate enumeration). The final barrier weight bounds the
/// objective gap by rows * mu.
struct GridResult {
  bool found = false;
  ControlInput u;
  double objective = std::numeric_limits<double>::infinity();
};

inline GridResult grid_oracle(const QpProblem& p) {
  const auto rows = all_rows(p);
  const auto interior = [&](ControlInput u) {
    return std::all_of(rows.begin(), rows.end(), [u](const ConstraintRow& r) { return r.evaluate(u) > 0.0; });
  };
  GridResult best;
  const double h0 = 1e-2;
  for (double a = p.limits.a_min; a <= p.limits.a_max + 1e-12; a += h0)
    for (double s = p.limits.steer_min; s <= p.limits.steer_max + 1e-12; s += h0) {
      const ControlInput u{a, s};
      if (!interior(u)) continue;
      const double f = objective(p, u);
      if (f < best.objective) best = {true, u, f};
    }
  if (!best.found) return best;

  ControlInput u = best.u;
  const auto barrier = [&](ControlInput x, double mu) {
    double v = objective(p, x);
    for (const auto& r : rows) v -= mu * std::log(r.evaluate(x));
    return v;
  };
  for (double mu = 1e-2; mu >= 1e-13; mu *= 0.1) {
    for (int it = 0; it < 100; ++it) {
      const double da = u.a - p.u_o.a, ds = u.steer - p.u_o.steer;
      double ga = 2 * (p.q.aa * da + p.q.as * ds), gs = 2 * (p.q.as * da + p.q.ss * ds);
      double haa = 2 * p.q.aa, has = 2 * p.q.as, hss = 2 * p.q.ss;
      for (const auto& r : rows) {
        const double sl = r.evaluate(u);
        ga -= mu * r.c_a / sl;
        gs -= mu * r.c_steer / sl;
        haa += mu * r.c_a * r.c_a / (sl * sl);
        has += mu * r.c_a * r.c_steer / (sl * sl);
        hss += mu * r.c_steer * r.c_steer / (sl * sl);
      }
      const double det = haa * hss - has * has;
      const double sa = -(hss * ga - has * gs) / det;
      const double ss = -(-has * ga + haa * gs) / det;
      const double decrement = -(ga * sa + gs * ss);
      if (decrement < 1e-20) break;
      const double f0 = barrier(u, mu);
      double t = 1.0;
      ControlInput next{u.a + sa, u.steer + ss};
      while (t > 1e-12 && (!interior(next) || barrier(next, mu) > f0 - 0.25 * t * decrement)) {
        t *= 0.5;
        next = {u.a + t * sa, u.steer + t * ss};
      }
      if (t <= 1e-12) break;
      u = next;
    }
  }
  best.u = u;
  best.objective = objective(p, u);
  return best;
}

// ---------------------------------------------------------------- filter

struct FilterCase {
  VehicleState ego;
  std::vector<ObstacleState> obstacles;
  ControlInput u_o;
};

inline const RoadModel& straight_road() {
  static const RoadModel road({{-100, 0}, {600, 0}}, -5.25, 5.25);
  return road;
}

/// Ego on a straight five-metre-margin road with up to `max_obstacles`
/// vehicles scattered around it.
inline FilterCase random_filter_case(test_support::Rng& rng, int max_obstacles) {
  FilterCase c;
  c.ego = {rng.uniform(0, 400), rng.uniform(-3, 3), rng.uniform(0, 25), rng.uniform(-0.3, 0.3)};
  const int n = rng.integer(0, max_obstacles);
  for (int i = 0; i < n; ++i) {
    ObstacleState ob;
    const double speed = rng.uniform(0, 25);
    ob.box = {c.ego.x + rng.uniform(-60, 60), rng.uniform(-5, 5), rng.uniform(3.5, 12), rng.uniform(1.6, 2.6),
              rng.uniform(-0.3, 0.3)};
    ob.vx = speed * std::cos(ob.box.theta);
    ob.vy = speed * std::sin(ob.box.theta);
    ob.id = i + 1;
    c.obstacles.push_back(ob);
  }
  c.u_o = {rng.uniform(-10, 5), rng.uniform(-0.7, 0.7)};
  return c;
}

}  // namespace oracle
