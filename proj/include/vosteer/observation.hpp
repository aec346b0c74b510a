#pragma once

#include <array>
#include <vector>

#include "vosteer/course.hpp"
#include "vosteer/vehicle.hpp"

namespace vosteer::observation {

using OneHot = std::array<double, 3>;  // {left, straight, right}

OneHot one_hot(course::Command c);
course::Command from_one_hot(const OneHot& h);

struct ObservationConfig {
  int curvature_samples = 13;
  double lookahead_spacing = 2.0;  // m between curvature samples, first at the car
  double route_match_threshold = 5.0;

  int feature_dim() const { return 3 + curvature_samples; }
};

/// Low-dimensional stand-in for the camera image: signed lateral offset to the
/// corridor center (left positive), heading error, speed and curvature of the
/// course ahead. The driving command rides alongside and joins the network
/// after feature extraction.
struct ObservationVector {
  std::vector<double> features;
  OneHot command{0.0, 1.0, 0.0};
};

/// Throws OffCourse when the state is farther than the route-match threshold
/// from the centerline.
ObservationVector observe(const vehicle::VehicleState& state, const course::Course& course, course::Command command,
                          const ObservationConfig& config = {});

/// Convenience overload taking the command from the course annotation at the
/// projected position.
ObservationVector observe(const vehicle::VehicleState& state, const course::Course& course,
                          const ObservationConfig& config = {});

}  // namespace vosteer::observation
