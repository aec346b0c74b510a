#pragma once

#include <limits>

#include "vosteer/geometry.hpp"

namespace vosteer::vehicle {

/// 70 degrees, the full-lock steering angle of the simulated car.
inline constexpr double kDefaultMaxSteer = 1.2217304763960306;

/// Below this longitudinal speed the slip model is singular and the dynamic
/// step falls back to the kinematic one.
inline constexpr double kMinDynamicSpeed = 0.1;

struct VehicleParams {
  double wheelbase = 2.5;              // m, rear axle to front axle
  double track_width = 1.5;            // m
  double max_steer = kDefaultMaxSteer;  // rad
  double cornering_stiffness = 1.6e5;  // N/rad, per axle (dynamic model)
  double mass = 1500.0;                // kg (dynamic model)
  double yaw_inertia = 2500.0;         // kg m^2 (dynamic model)
  double cg_to_front_axle = 1.125;     // m (dynamic model), 0 < a < wheelbase

  double cg_to_rear_axle() const { return wheelbase - cg_to_front_axle; }

  /// Throws InvalidArgument describing the first violated constraint.
  void validate() const;
};

/// Pose is the rear-axle reference point. lateral_velocity is the body-frame
/// lateral velocity of the center of gravity; both it and yaw_rate are only
/// integrated by the dynamic model.
struct VehicleState {
  geometry::PlanarPose pose;
  double speed = 0.0;
  double lateral_velocity = 0.0;
  double yaw_rate = 0.0;
};

struct ArcMotion {
  double arc_length = 0.0;
  double heading_change = 0.0;
  double turn_radius = std::numeric_limits<double>::infinity();
  bool straight = true;
};

struct AckermannAngles {
  double delta_left = 0.0;
  double delta_right = 0.0;
};

struct StepResult {
  VehicleState state;
  ArcMotion arc;
};

/// alpha = L / dx^2, the gain that turns a lateral offset observed dx ahead
/// into a steering angle under the small-heading-change approximation.
double canonical_alpha(const VehicleParams& params, double dx);

/// delta = atan(dy * alpha).
double steering_from_lateral(double dy, double alpha);

/// Same as above, clamped to the vehicle's steering range.
double steering_from_lateral(double dy, double alpha, const VehicleParams& params);

/// Exact constant-curvature integration of the kinematic bicycle model about
/// the rear axle. Speed out equals throttle_speed.
StepResult step_kinematic(const VehicleState& state, double steer, double throttle_speed, double dt,
                          const VehicleParams& params);

/// Linear single-track model with slip (RK4, substepped for stability).
VehicleState step_dynamic(const VehicleState& state, double steer, double throttle_speed, double dt,
                          const VehicleParams& params);

/// Inner/outer front wheel angles for a commanded bicycle angle.
AckermannAngles ackermann_split(double steer, const VehicleParams& params);

/// Linear map onto the [-1, 1] simulator steering command.
double steering_to_command(double steer, const VehicleParams& params);
double command_to_steering(double command, const VehicleParams& params);

}  // namespace vosteer::vehicle
