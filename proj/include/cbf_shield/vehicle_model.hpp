#pragma once

#include "cbf_shield/geometry.hpp"

namespace cbf_shield {

/// Ego kinematic state: mass-centre position, speed and heading.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double phi = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const VehicleState&) const = default;
};

/// Affine control vector [a, tan(delta_f)].
struct ControlInput {
  double a = 0.0;
  double steer = 0.0;

  bool operator==(const ControlInput&) const = default;
};

struct VehicleGeometry {
  double wheelbase = 2.7;
  /// Carried for completeness; the small-slip kinematic model ignores it.
  double rear_wheelbase = 1.35;
  double body_length = 4.5;
  double body_width = 1.8;
};

struct ControlLimits {
  double a_min = -8.0;
  double a_max = 3.0;
  double steer_min = -0.5;
  double steer_max = 0.5;

  ControlInput clamp(ControlInput u) const;
  bool contains(ControlInput u, double tol = 0.0) const;
};

bool is_valid(const VehicleGeometry& geom);
bool is_valid(const ControlLimits& limits);

/// Time derivative of [x, y, v, phi].
struct StateDerivative {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
  double phi = 0.0;
};

StateDerivative cartesian_derivative(const VehicleState& state, ControlInput u,
                                     const VehicleGeometry& geom);

/// One RK4 step with u held constant; heading wrapped to (-pi, pi].
VehicleState step(const VehicleState& state, ControlInput u, const VehicleGeometry& geom,
                  double dt);

/// Road-frame state: arc length, signed lateral offset (left positive),
/// speed and heading error relative to the local tangent.
struct FrenetState {
  double s = 0.0;
  double d = 0.0;
  double v = 0.0;
  double mu = 0.0;
};

struct FrenetDerivative {
  double s = 0.0;
  double d = 0.0;
  double v = 0.0;
  double mu = 0.0;
};

/// Throws SingularFrenetError when 1 - d*kappa <= 0.
FrenetDerivative frenet_derivative(const FrenetState& fs, ControlInput u, double kappa,
                                   const VehicleGeometry& geom);

/// RK4 step of the Frenet model with constant curvature along the step.
FrenetState step_frenet(const FrenetState& fs, ControlInput u, double kappa,
                        const VehicleGeometry& geom, double dt);

}  // namespace cbf_shield
