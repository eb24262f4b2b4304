#include "cbf_shield/vehicle_model.hpp"

#include <algorithm>

#include "cbf_shield/errors.hpp"

namespace cbf_shield {

ControlInput ControlLimits::clamp(ControlInput u) const {
  return {std::clamp(u.a, a_min, a_max), std::clamp(u.steer, steer_min, steer_max)};
}

bool ControlLimits::contains(ControlInput u, double tol) const {
  return u.a >= a_min - tol && u.a <= a_max + tol && u.steer >= steer_min - tol &&
         u.steer <= steer_max + tol;
}

bool is_valid(const VehicleGeometry& geom) {
  return geom.rear_wheelbase > 0.0 && geom.rear_wheelbase < geom.wheelbase &&
         geom.body_length > 0.0 && geom.body_width > 0.0;
}

bool is_valid(const ControlLimits& limits) {
  return limits.a_min < 0.0 && limits.a_max > 0.0 && limits.steer_min < 0.0 &&
         limits.steer_max > 0.0;
}

StateDerivative cartesian_derivative(const VehicleState& state, ControlInput u,
                                     const VehicleGeometry& geom) {
  return {state.v * std::cos(state.phi), state.v * std::sin(state.phi), u.a,
          state.v / geom.wheelbase * u.steer};
}

namespace {

VehicleState advance(const VehicleState& s, const StateDerivative& k, double h) {
  return {s.x + h * k.x, s.y + h * k.y, s.v + h * k.v, s.phi + h * k.phi};
}

FrenetState advance(const FrenetState& s, const FrenetDerivative& k, double h) {
  return {s.s + h * k.s, s.d + h * k.d, s.v + h * k.v, s.mu + h * k.mu};
}

}  // namespace

VehicleState step(const VehicleState& state, ControlInput u, const VehicleGeometry& geom,
                  double dt) {
  const auto k1 = cartesian_derivative(state, u, geom);
  const auto k2 = cartesian_derivative(advance(state, k1, 0.5 * dt), u, geom);
  const auto k3 = cartesian_derivative(advance(state, k2, 0.5 * dt), u, geom);
  const auto k4 = cartesian_derivative(advance(state, k3, dt), u, geom);
  VehicleState next{
      state.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
      state.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
      state.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
      state.phi + dt / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi),
  };
  next.phi = normalize_angle(next.phi);
  return next;
}

FrenetDerivative frenet_derivative(const FrenetState& fs, ControlInput u, double kappa,
                                   const VehicleGeometry& geom) {
  const double scale = 1.0 - fs.d * kappa;
  if (!(scale > 0.0)) throw SingularFrenetError("1 - d*kappa <= 0");
  const double s_dot = fs.v * std::cos(fs.mu) / scale;
  return {s_dot, fs.v * std::sin(fs.mu), u.a, -kappa * s_dot + fs.v / geom.wheelbase * u.steer};
}

FrenetState step_frenet(const FrenetState& fs, ControlInput u, double kappa,
                        const VehicleGeometry& geom, double dt) {
  const auto k1 = frenet_derivative(fs, u, kappa, geom);
  const auto k2 = frenet_derivative(advance(fs, k1, 0.5 * dt), u, kappa, geom);
  const auto k3 = frenet_derivative(advance(fs, k2, 0.5 * dt), u, kappa, geom);
  const auto k4 = frenet_derivative(advance(fs, k3, dt), u, kappa, geom);
  FrenetState next{
      fs.s + dt / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s),
      fs.d + dt / 6.0 * (k1.d + 2.0 * k2.d + 2.0 * k3.d + k4.d),
      fs.v + dt / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
      fs.mu + dt / 6.0 * (k1.mu + 2.0 * k2.mu + 2.0 * k3.mu + k4.mu),
  };
  next.mu = normalize_angle(next.mu);
  return next;
}

}  // namespace cbf_shield
