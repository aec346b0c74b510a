#pragma once

#include <cmath>
#include <numbers>

namespace vosteer::geometry {

/// Zero-length threshold for displacement vectors, in meters.
inline constexpr double kEpsilonZero = 1e-9;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Planar pose in a global frame. Heading is kept wrapped into (-pi, pi] and
/// all fields are finite; the constructor throws InvalidArgument otherwise.
class PlanarPose {
 public:
  PlanarPose() = default;
  PlanarPose(double x, double y, double heading);

  double x() const { return x_; }
  double y() const { return y_; }
  double heading() const { return heading_; }

  friend bool operator==(const PlanarPose&, const PlanarPose&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double heading_ = 0.0;
};

struct PlanarVec {
  double vx = 0.0;
  double vy = 0.0;

  double norm() const { return std::hypot(vx, vy); }
  friend bool operator==(const PlanarVec&, const PlanarVec&) = default;
};

/// Motion in the local frame: dx forward, dy lateral (left positive).
struct RelativeMotion {
  double dx = 0.0;
  double dy = 0.0;
};

/// 2D cross product a x b (z component).
inline double cross(const PlanarVec& a, const PlanarVec& b) { return a.vx * b.vy - a.vy * b.vx; }

/// Rotates v counter-clockwise by angle.
PlanarVec rotate(const PlanarVec& v, double angle);

/// Displacement from one pose's position to another's.
PlanarVec displacement(const PlanarPose& from, const PlanarPose& to);

/// Pose of `to` expressed in the frame of `from`.
PlanarPose relative_pose(const PlanarPose& from, const PlanarPose& to);

/// Applies `delta` (expressed in the frame of `base`) on top of `base`.
/// compose(a, relative_pose(a, b)) == b.
PlanarPose compose(const PlanarPose& base, const PlanarPose& delta);

/// Angle theta such that rotate(v, theta) == (|v|, 0). Throws DegenerateVector
/// when |v| <= kEpsilonZero.
double align_rotation(const PlanarVec& v);

/// Expresses v_curr in the frame whose forward axis is v_prev.
RelativeMotion local_motion(const PlanarVec& v_prev, const PlanarVec& v_curr);

}  // namespace vosteer::geometry
