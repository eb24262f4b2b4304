#include "cbf_shield/barrier.hpp"

#include "cbf_shield/errors.hpp"

namespace cbf_shield {

bool is_valid(const BarrierParams& p) {
  return p.c_safe >= 1.0 && p.alpha1 > 0.0 && p.alpha2 > 0.0 && p.beta > 0.0 && p.gamma > 0.0 &&
         p.lon_margin >= 0.0 && p.lat_margin >= 0.0;
}

std::string to_string(const ConstraintTag& tag) {
  switch (tag.kind) {
    case ConstraintKind::obstacle:
      return "obstacle:" + std::to_string(tag.id);
    case ConstraintKind::feasibility:
      return "feasibility:" + std::to_string(tag.id);
    case ConstraintKind::road_lower:
      return "road:lower";
    case ConstraintKind::road_upper:
      return "road:upper";
    case ConstraintKind::limit:
      return "limit:" + std::to_string(tag.id);
  }
  return "unknown";
}

namespace {

Vec2 rotate_into(double heading, Vec2 v) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 rotate_out(double heading, Vec2 v) {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Derivatives of rho(d) = sqrt(d' D d) with D = diag(1/l_lon^2, 1/l_lat^2),
// as multilinear forms in the frame coordinates.
struct EllipseJet {
  double ia2 = 0.0;
  double ib2 = 0.0;
  Vec2 d;
  double rho = 0.0;
  Vec2 g;

  EllipseJet(Vec2 rel, const SafetyCoefficients& k)
      : ia2(1.0 / (k.l_lon * k.l_lon)), ib2(1.0 / (k.l_lat * k.l_lat)), d(rel) {
    rho = std::sqrt(d.x * d.x * ia2 + d.y * d.y * ib2);
    if (!(rho > 0.0)) throw CoincidentCentersError("ego and obstacle centres coincide");
    g = {d.x * ia2 / rho, d.y * ib2 / rho};
  }

  double quad(Vec2 a, Vec2 b) const { return a.x * b.x * ia2 + a.y * b.y * ib2; }
  double hess(Vec2 a, Vec2 b) const { return (quad(a, b) - dot(g, a) * dot(g, b)) / rho; }
  double third(Vec2 a, Vec2 b, Vec2 c) const {
    const double ga = dot(g, a), gb = dot(g, b), gc = dot(g, c);
    return (-quad(a, b) * gc - quad(a, c) * gb - quad(b, c) * ga + 3.0 * ga * gb * gc) /
           (rho * rho);
  }
};

// Relative kinematics in the ellipse frame at the evaluation instant. The
// ego heading coincides with the frame heading here, so its direction is
// (1, 0) and its left normal (0, 1).
struct RelativeMotion {
  EllipseJet jet;
  Vec2 w;  // obstacle velocity minus ego velocity
  Vec2 w_ob;  // obstacle velocity
  Vec2 a_ob;  // obstacle acceleration, yaw_rate * perp(w_ob)
  double omega;
  double v;
  double c_safe;
  double wheelbase;

  static constexpr Vec2 e{1.0, 0.0};
  static constexpr Vec2 e_left{0.0, 1.0};

  double h() const { return jet.rho - c_safe; }
  double h_dot() const { return dot(jet.g, w); }
};

RelativeMotion relative_motion(const VehicleState& ego, const ObstacleState& ob,
                               const VehicleGeometry& geom, const BarrierParams& params) {
  const EllipseFrame frame = make_frame(ego, ob, geom, params);
  const Vec2 rel = rotate_into(frame.heading, ob.position() - ego.position());
  const Vec2 w_ob = rotate_into(frame.heading, ob.velocity());
  const Vec2 w = w_ob - Vec2{ego.v, 0.0};
  return {EllipseJet(rel, frame.coeffs), w,      w_ob,           perp(w_ob) * ob.yaw_rate,
          ob.yaw_rate,                   ego.v,  frame.c_safe,   geom.wheelbase};
}

struct ObstacleRowParts {
  ConstraintRow row;
  double h = 0.0;
  double h_dot = 0.0;
};

ObstacleRowParts obstacle_row_parts(const RelativeMotion& m, const BarrierParams& p) {
  const auto& j = m.jet;
  const double k1 = p.alpha1 + p.alpha2;
  const double k0 = p.alpha1 * p.alpha2;
  const double h = m.h();
  const double h_dot = m.h_dot();

  ConstraintRow row;
  row.b = j.hess(m.w, m.w) + dot(j.g, m.a_ob) + k1 * h_dot + k0 * h;
  row.c_a = -dot(j.g, RelativeMotion::e);
  row.c_steer = -(m.v * m.v / m.wheelbase) * dot(j.g, RelativeMotion::e_left);
  if (!p.heading_frozen) {
    // Rotating the frame by dpsi maps every frame vector x to x - dpsi*perp(x).
    const double frame_rate_gain =
        j.hess(m.w, -perp(j.d)) + dot(j.g, -perp(m.w));
    row.c_steer += m.v / m.wheelbase * frame_rate_gain;
  }
  return {row, h, h_dot};
}

}  // namespace

LonLat lon_lat_distance(const VehicleState& ego, const ObstacleState& ob) {
  const Vec2 rel = rotate_into(ego.phi, ob.position() - ego.position());
  return {rel.x, rel.y};
}

SafetyCoefficients safety_coefficients(const VehicleGeometry& ego_geom, const ObstacleState& ob,
                                       const VehicleState& ego, const BarrierParams& params) {
  const double dtheta = ob.box.theta - ego.phi;
  const double c = std::abs(std::cos(dtheta));
  const double s = std::abs(std::sin(dtheta));
  return {0.5 * (ego_geom.body_length + ob.box.l * c + ob.box.w * s) + params.lon_margin,
          0.5 * (ego_geom.body_width + ob.box.l * s + ob.box.w * c) + params.lat_margin};
}

EllipseFrame make_frame(const VehicleState& ego, const ObstacleState& ob,
                        const VehicleGeometry& geom, const BarrierParams& params) {
  return {ego.phi, safety_coefficients(geom, ob, ego, params), params.c_safe};
}

double eval_h(Vec2 ego_position, Vec2 obstacle_position, const EllipseFrame& frame) {
  const EllipseJet jet(rotate_into(frame.heading, obstacle_position - ego_position), frame.coeffs);
  return jet.rho - frame.c_safe;
}

double eval_h(const VehicleState& ego, const ObstacleState& ob, const VehicleGeometry& geom,
              const BarrierParams& params) {
  return eval_h(ego.position(), ob.position(), make_frame(ego, ob, geom, params));
}

BarrierGradient barrier_gradient(const VehicleState& ego, const ObstacleState& ob,
                                 const VehicleGeometry& geom, const BarrierParams& params) {
  const RelativeMotion m = relative_motion(ego, ob, geom, params);
  const Vec2 g_world = rotate_out(ego.phi, m.jet.g);
  BarrierGradient out;
  out.ob_x = g_world.x;
  out.ob_y = g_world.y;
  out.ego_x = -g_world.x;
  out.ego_y = -g_world.y;
  out.phi = params.heading_frozen ? 0.0 : dot(m.jet.g, -perp(m.jet.d));
  return out;
}

BarrierValue eval_barrier(const VehicleState& ego, const ObstacleState& ob,
                          const VehicleGeometry& geom, const BarrierParams& params) {
  const RelativeMotion m = relative_motion(ego, ob, geom, params);
  return {m.h(), m.h_dot()};
}

ConstraintRow obstacle_constraint_row(const VehicleState& ego, const ObstacleState& ob,
                                      const VehicleGeometry& geom, const BarrierParams& params) {
  auto parts = obstacle_row_parts(relative_motion(ego, ob, geom, params), params);
  parts.row.tag = {ConstraintKind::obstacle, ob.id};
  return parts.row;
}

FeasibilityValue eval_feasibility(const VehicleState& ego, const ObstacleState& ob,
                                  const VehicleGeometry& geom, const BarrierParams& params,
                                  const ControlLimits& limits) {
  const auto row = obstacle_row_parts(relative_motion(ego, ob, geom, params), params).row;
  const ControlInput hi{limits.a_max, 0.0};
  const ControlInput lo{limits.a_min, 0.0};
  const double at_hi = row.evaluate(hi);
  const double at_lo = row.evaluate(lo);
  return at_lo > at_hi ? FeasibilityValue{at_lo, lo} : FeasibilityValue{at_hi, hi};
}

double feasibility_barrier(const VehicleState& ego, const ObstacleState& ob,
                           const VehicleGeometry& geom, const BarrierParams& params,
                           const ControlLimits& limits) {
  return eval_feasibility(ego, ob, geom, params, limits).h_f;
}

ConstraintRow feasibility_constraint_row(const VehicleState& ego, const ObstacleState& ob,
                                         const VehicleGeometry& geom, const BarrierParams& params,
                                         const ControlLimits& limits) {
  const RelativeMotion m = relative_motion(ego, ob, geom, params);
  const auto& j = m.jet;
  const Vec2 e = RelativeMotion::e;
  const Vec2 e_left = RelativeMotion::e_left;
  const Vec2 w = m.w;
  const double k1 = params.alpha1 + params.alpha2;
  const double k0 = params.alpha1 * params.alpha2;

  const auto parts = obstacle_row_parts(m, params);
  const double a_star = parts.row.c_a >= 0.0 ? limits.a_max : limits.a_min;
  const double h_f = parts.row.b + parts.row.c_a * a_star;

  // h_F = H[w,w] + g.(a_ob - a* e) + k1 g.w + k0 h as a function of the
  // relative position d, the speed v (w = w_ob - v e), the ego heading
  // relative to the frame (turns e and hence w) and the obstacle's turning
  // velocity (w_ob' = a_ob, a_ob' = -omega^2 w_ob).
  const Vec2 a_ob = m.a_ob;
  const double along_d = j.third(w, w, w) + j.hess(a_ob, w) - a_star * j.hess(e, w) +
                         k1 * j.hess(w, w) + k0 * m.h_dot();
  const double obstacle_turn =
      2.0 * j.hess(w, a_ob) + k1 * dot(j.g, a_ob) - m.omega * m.omega * dot(j.g, m.w_ob);
  const double d_speed = -2.0 * j.hess(w, e) - k1 * dot(j.g, e);
  double d_heading = -2.0 * m.v * j.hess(w, e_left) - a_star * dot(j.g, e_left) -
                     k1 * m.v * dot(j.g, e_left);
  if (!params.heading_frozen) {
    const Vec2 dd = -perp(j.d);
    const Vec2 dw = -perp(w);
    const Vec2 de = -perp(e);
    d_heading += j.third(w, w, dd) - a_star * j.hess(e, dd) + k1 * j.hess(w, dd) + k0 * dot(j.g, dd);
    d_heading += 2.0 * j.hess(w, dw) + k1 * dot(j.g, dw);
    d_heading += -a_star * dot(j.g, de);
    d_heading += j.hess(a_ob, dd) + dot(j.g, -perp(a_ob));
  }

  ConstraintRow row;
  row.b = along_d + obstacle_turn + params.beta * h_f;
  row.c_a = d_speed;
  row.c_steer = m.v / m.wheelbase * d_heading;
  row.tag = {ConstraintKind::feasibility, ob.id};
  return row;
}

std::pair<ConstraintRow, ConstraintRow> road_constraint_rows(const FrenetState& fs, double kappa,
                                                             double d_min, double d_max,
                                                             const VehicleGeometry& geom,
                                                             const BarrierParams& params) {
  const double scale = 1.0 - fs.d * kappa;
  if (!(scale > 0.0)) throw SingularFrenetError("1 - d*kappa <= 0");
  const double g = params.gamma;
  const double sin_mu = std::sin(fs.mu);
  const double cos_mu = std::cos(fs.mu);
  const double v = fs.v;

  // d'' = a sin(mu) + v cos(mu) (-kappa v cos(mu) / (1 - d kappa) + v/L steer)
  const double drift = -kappa * v * v * cos_mu * cos_mu / scale;
  const double steer_gain = v * v * cos_mu / geom.wheelbase;
  const double d_dot = v * sin_mu;

  ConstraintRow lower{sin_mu, steer_gain, drift + 2.0 * g * d_dot + g * g * (fs.d - d_min),
                      {ConstraintKind::road_lower, 0}};
  ConstraintRow upper{-sin_mu, -steer_gain, -drift - 2.0 * g * d_dot + g * g * (d_max - fs.d),
                      {ConstraintKind::road_upper, 1}};
  return {lower, upper};
}

std::pair<ConstraintRow, ConstraintRow> road_constraint_rows(const FrenetState& fs,
                                                             const RoadModel& road,
                                                             const VehicleGeometry& geom,
                                                             const BarrierParams& params) {
  return road_constraint_rows(fs, road.at(fs.s).kappa, road.d_min(), road.d_max(), geom, params);
}

}  // namespace cbf_shield
