#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vosteer/geometry.hpp"

namespace vosteer::course {

enum class Command { kLeft, kStraight, kRight };

char command_letter(Command c);
Command command_from_letter(std::string_view letter);

enum class SegmentType { kLine, kArc };

struct Segment {
  SegmentType type = SegmentType::kLine;
  double length = 0.0;     // m, > 0
  double curvature = 0.0;  // 1/m, left positive; 0 for lines
  Command command = Command::kStraight;
};

/// Result of projecting a point onto the centerline.
struct Projection {
  double s = 0.0;        // arc length of the foot point
  double lateral = 0.0;  // signed offset, left of the centerline positive
  double distance = 0.0;
  double tangent = 0.0;  // centerline heading at the foot point
};

inline constexpr double kDefaultCorridorHalfWidth = 1.75;

/// Piecewise line/arc centerline with a driving corridor around it. Segments
/// are chained head to tail, so positions and tangents are continuous at every
/// joint. A course whose end pose coincides with its start pose is closed and
/// arc length wraps around.
class Course {
 public:
  Course(std::string id, std::vector<Segment> segments, double corridor_half_width = kDefaultCorridorHalfWidth,
         geometry::PlanarPose start = {});

  const std::string& id() const { return id_; }
  const std::vector<Segment>& segments() const { return segments_; }
  double corridor_half_width() const { return corridor_half_width_; }
  double length() const { return total_length_; }
  bool closed() const { return closed_; }

  /// Centerline pose (position and tangent) at arc length s. Open courses
  /// extend straight beyond either end.
  geometry::PlanarPose pose_at(double s) const;
  /// Point offset laterally (left positive) from the centerline at s.
  geometry::PlanarPose offset_pose_at(double s, double lateral) const;
  double curvature_at(double s) const;
  Command command_at(double s) const;

  Projection project(double x, double y) const;

  /// Maps s into [0, length) on closed courses; identity on open ones.
  double wrap_s(double s) const;

 private:
  std::size_t segment_index(double s) const;

  std::string id_;
  std::vector<Segment> segments_;
  double corridor_half_width_;
  std::vector<geometry::PlanarPose> starts_;
  std::vector<double> start_s_;
  double total_length_ = 0.0;
  bool closed_ = false;
};

/// Parses the course JSON format: either a bare list of segments or an object
/// {"id", "corridor_half_width", "segments": [...]}, each segment being
/// {"type": "line"|"arc", "length_m", "curvature_per_m", "command": "L"|"S"|"R"}.
Course parse_course_json(std::string_view text, const std::string& default_id);
Course load_course(const std::string& path);
std::string course_to_json(const Course& course);

/// Closed loop of quarter turns of the given radius: five left, one right.
Course make_loop_course(const std::string& id, double turn_radius, double first_straight);

/// Named courses: "benchmark" (15 m turns), "gentle" (25 m), "sharp" (10 m).
Course builtin_course(std::string_view name);

/// Resolves "builtin:<name>" or a file path.
Course resolve_course(const std::string& source);

}  // namespace vosteer::course
