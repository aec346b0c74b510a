#include "vosteer/observation.hpp"

#include <string>

#include "vosteer/errors.hpp"

namespace vosteer::observation {

OneHot one_hot(course::Command c) {
  switch (c) {
    case course::Command::kLeft:
      return {1.0, 0.0, 0.0};
    case course::Command::kStraight:
      return {0.0, 1.0, 0.0};
    case course::Command::kRight:
      return {0.0, 0.0, 1.0};
  }
  return {0.0, 1.0, 0.0};
}

course::Command from_one_hot(const OneHot& h) {
  if (h[0] >= h[1] && h[0] >= h[2]) return course::Command::kLeft;
  if (h[2] > h[1]) return course::Command::kRight;
  return course::Command::kStraight;
}

namespace {

ObservationVector observe_projected(const vehicle::VehicleState& state, const course::Course& course,
                                    const course::Projection& proj, course::Command command,
                                    const ObservationConfig& config) {
  if (proj.distance > config.route_match_threshold) {
    throw OffCourse("state at (" + std::to_string(state.pose.x()) + ", " + std::to_string(state.pose.y()) +
                    ") is " + std::to_string(proj.distance) + " m from course '" + course.id() + "'");
  }
  ObservationVector obs;
  obs.features.reserve(static_cast<std::size_t>(config.feature_dim()));
  obs.features.push_back(proj.lateral);
  obs.features.push_back(geometry::wrap_angle(state.pose.heading() - proj.tangent));
  obs.features.push_back(state.speed);
  for (int k = 0; k < config.curvature_samples; ++k) {
    obs.features.push_back(course.curvature_at(proj.s + k * config.lookahead_spacing));
  }
  obs.command = one_hot(command);
  return obs;
}

}  // namespace

ObservationVector observe(const vehicle::VehicleState& state, const course::Course& course, course::Command command,
                          const ObservationConfig& config) {
  const course::Projection proj = course.project(state.pose.x(), state.pose.y());
  return observe_projected(state, course, proj, command, config);
}

ObservationVector observe(const vehicle::VehicleState& state, const course::Course& course,
                          const ObservationConfig& config) {
  const course::Projection proj = course.project(state.pose.x(), state.pose.y());
  return observe_projected(state, course, proj, course.command_at(proj.s), config);
}

}  // namespace vosteer::observation
