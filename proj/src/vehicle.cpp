#include "vosteer/vehicle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "vosteer/errors.hpp"

namespace vosteer::vehicle {

using geometry::PlanarPose;

void VehicleParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("VehicleParams: ") + what);
  };
  require(std::isfinite(wheelbase) && wheelbase > 0.0, "wheelbase must be > 0");
  require(std::isfinite(track_width) && track_width > 0.0, "track_width must be > 0");
  require(max_steer > 0.0 && max_steer < std::numbers::pi / 2.0, "max_steer must be in (0, pi/2)");
  require(std::isfinite(cornering_stiffness) && cornering_stiffness > 0.0,
          "cornering_stiffness must be > 0");
  require(std::isfinite(mass) && mass > 0.0, "mass must be > 0");
  require(std::isfinite(yaw_inertia) && yaw_inertia > 0.0, "yaw_inertia must be > 0");
  require(cg_to_front_axle > 0.0 && cg_to_front_axle < wheelbase,
          "cg_to_front_axle must lie strictly between the axles");
}

double canonical_alpha(const VehicleParams& params, double dx) {
  if (!(dx > 0.0)) throw InvalidArgument("canonical_alpha: dx must be > 0");
  return params.wheelbase / (dx * dx);
}

double steering_from_lateral(double dy, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("steering_from_lateral: alpha must be > 0");
  return std::atan(dy * alpha);
}

double steering_from_lateral(double dy, double alpha, const VehicleParams& params) {
  return std::clamp(steering_from_lateral(dy, alpha), -params.max_steer, params.max_steer);
}

namespace {

void check_step_inputs(double steer, double throttle_speed, double dt, const VehicleParams& params) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidStep("step: dt must be positive, got " + std::to_string(dt));
  }
  if (!(std::abs(steer) <= params.max_steer * (1.0 + 1e-12))) {
    throw InvalidArgument("step: steer " + std::to_string(steer) + " exceeds max_steer");
  }
  if (!(throttle_speed >= 0.0) || !std::isfinite(throttle_speed)) {
    throw InvalidArgument("step: throttle_speed must be >= 0");
  }
}

// sin(x)/x, accurate near zero.
double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

StepResult step_kinematic(const VehicleState& state, double steer, double throttle_speed, double dt,
                          const VehicleParams& params) {
  check_step_inputs(steer, throttle_speed, dt, params);

  const double tan_steer = std::tan(steer);
  const double arc_length = throttle_speed * dt;
  const double heading_change = arc_length * tan_steer / params.wheelbase;
  if (std::abs(heading_change) > std::numbers::pi) {
    throw InvalidStep("step_kinematic: heading change per step exceeds pi; reduce dt");
  }

  // The chord of the arc has length S*sinc(dphi/2) and points along the mean
  // heading; this form is exact for every curvature including zero.
  const double phi = state.pose.heading();
  const double chord = arc_length * sinc(0.5 * heading_change);
  const double chord_dir = phi + 0.5 * heading_change;

  StepResult out;
  out.state.pose = PlanarPose(state.pose.x() + chord * std::cos(chord_dir),
                              state.pose.y() + chord * std::sin(chord_dir), phi + heading_change);
  out.state.speed = throttle_speed;
  out.state.lateral_velocity = 0.0;
  out.state.yaw_rate = throttle_speed * tan_steer / params.wheelbase;

  out.arc.arc_length = arc_length;
  out.arc.heading_change = heading_change;
  out.arc.straight = tan_steer == 0.0;
  out.arc.turn_radius =
      out.arc.straight ? std::numeric_limits<double>::infinity() : params.wheelbase / tan_steer;
  return out;
}

namespace {

// Center-of-gravity state: X, Y, yaw, lateral velocity, yaw rate.
using DynState = std::array<double, 5>;

struct DynInputs {
  double vx;
  double steer;
  double a;
  double b;
  double c;
  double mass;
  double inertia;
};

DynState derivative(const DynState& s, const DynInputs& in) {
  const double yaw = s[2];
  const double vy = s[3];
  const double r = s[4];
  const double slip_front = std::atan2(vy + in.a * r, in.vx) - in.steer;
  const double slip_rear = std::atan2(vy - in.b * r, in.vx);
  const double force_front = -in.c * slip_front;
  const double force_rear = -in.c * slip_rear;
  const double cos_steer = std::cos(in.steer);
  return {in.vx * std::cos(yaw) - vy * std::sin(yaw),
          in.vx * std::sin(yaw) + vy * std::cos(yaw),
          r,
          (force_front * cos_steer + force_rear) / in.mass - in.vx * r,
          (in.a * force_front * cos_steer - in.b * force_rear) / in.inertia};
}

DynState axpy(const DynState& x, double h, const DynState& k) {
  DynState out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + h * k[i];
  return out;
}

}  // namespace

VehicleState step_dynamic(const VehicleState& state, double steer, double throttle_speed, double dt,
                          const VehicleParams& params) {
  check_step_inputs(steer, throttle_speed, dt, params);
  if (throttle_speed < kMinDynamicSpeed) {
    return step_kinematic(state, steer, throttle_speed, dt, params).state;
  }

  const DynInputs in{throttle_speed,      steer,       params.cg_to_front_axle, params.cg_to_rear_axle(),
                     params.cornering_stiffness, params.mass, params.yaw_inertia};

  // Largest lateral/yaw eigenvalue magnitude bounds the explicit RK4 step.
  const double stiffness_rate =
      2.0 * in.c / (in.mass * in.vx) + in.c * (in.a * in.a + in.b * in.b) / (in.inertia * in.vx);
  const double max_substep = 1.0 / stiffness_rate;
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / max_substep)));
  const double h = dt / substeps;

  const double yaw0 = state.pose.heading();
  DynState s{state.pose.x() + in.b * std::cos(yaw0), state.pose.y() + in.b * std::sin(yaw0), yaw0,
             state.lateral_velocity, state.yaw_rate};
  for (int i = 0; i < substeps; ++i) {
    const DynState k1 = derivative(s, in);
    const DynState k2 = derivative(axpy(s, 0.5 * h, k1), in);
    const DynState k3 = derivative(axpy(s, 0.5 * h, k2), in);
    const DynState k4 = derivative(axpy(s, h, k3), in);
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
  }

  VehicleState out;
  out.pose = PlanarPose(s[0] - in.b * std::cos(s[2]), s[1] - in.b * std::sin(s[2]), s[2]);
  out.speed = throttle_speed;
  out.lateral_velocity = s[3];
  out.yaw_rate = s[4];
  return out;
}

AckermannAngles ackermann_split(double steer, const VehicleParams& params) {
  if (!(std::abs(steer) <= params.max_steer * (1.0 + 1e-12))) {
    throw InvalidArgument("ackermann_split: steer exceeds max_steer");
  }
  // The inner wheel turns further. For a left turn (steer > 0) the left wheel
  // is inner; for a right turn the right wheel is, and because both angles are
  // then negative the same signed offsets apply.
  const double half_diff = 0.5 * steer * steer * params.track_width / params.wheelbase;
  return {steer + half_diff, steer - half_diff};
}

double steering_to_command(double steer, const VehicleParams& params) {
  return std::clamp(steer / params.max_steer, -1.0, 1.0);
}

double command_to_steering(double command, const VehicleParams& params) {
  return std::clamp(command, -1.0, 1.0) * params.max_steer;
}

}  // namespace vosteer::vehicle
