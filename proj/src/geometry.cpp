#include "vosteer/geometry.hpp"

#include <string>

#include "vosteer/errors.hpp"

namespace vosteer::geometry {

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

PlanarPose::PlanarPose(double x, double y, double heading)
    : x_(x), y_(y), heading_(wrap_angle(heading)) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(heading)) {
    throw InvalidArgument("PlanarPose: non-finite field (" + std::to_string(x) + ", " +
                          std::to_string(y) + ", " + std::to_string(heading) + ")");
  }
}

PlanarVec rotate(const PlanarVec& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.vx - s * v.vy, s * v.vx + c * v.vy};
}

PlanarVec displacement(const PlanarPose& from, const PlanarPose& to) {
  return {to.x() - from.x(), to.y() - from.y()};
}

PlanarPose relative_pose(const PlanarPose& from, const PlanarPose& to) {
  const PlanarVec local = rotate(displacement(from, to), -from.heading());
  return {local.vx, local.vy, to.heading() - from.heading()};
}

PlanarPose compose(const PlanarPose& base, const PlanarPose& delta) {
  const PlanarVec offset = rotate({delta.x(), delta.y()}, base.heading());
  return {base.x() + offset.vx, base.y() + offset.vy, base.heading() + delta.heading()};
}

double align_rotation(const PlanarVec& v) {
  if (!(v.norm() > kEpsilonZero)) {
    throw DegenerateVector("align_rotation: vector norm " + std::to_string(v.norm()) +
                           " is below the zero threshold");
  }
  return wrap_angle(-std::atan2(v.vy, v.vx));
}

RelativeMotion local_motion(const PlanarVec& v_prev, const PlanarVec& v_curr) {
  const double theta = align_rotation(v_prev);
  const PlanarVec aligned = rotate(v_curr, theta);
  // The rotated y component and the cross product agree in sign up to rounding;
  // the cross product is the authoritative side test, so parallel vectors give
  // exactly zero.
  const double side = cross(v_prev, v_curr);
  const double dy = side == 0.0 ? 0.0 : std::copysign(std::abs(aligned.vy), side);
  return {aligned.vx, dy};
}

}  // namespace vosteer::geometry
