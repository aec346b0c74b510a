#include "vosteer/course.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vosteer/errors.hpp"

namespace vosteer::course {

using geometry::PlanarPose;
using geometry::wrap_angle;

char command_letter(Command c) {
  switch (c) {
    case Command::kLeft:
      return 'L';
    case Command::kStraight:
      return 'S';
    case Command::kRight:
      return 'R';
  }
  return 'S';
}

Command command_from_letter(std::string_view letter) {
  if (letter == "L") return Command::kLeft;
  if (letter == "S") return Command::kStraight;
  if (letter == "R") return Command::kRight;
  throw InvalidArgument("unknown command '" + std::string(letter) + "' (expected L, S or R)");
}

namespace {

PlanarPose advance(const PlanarPose& p, const Segment& seg, double t) {
  const double dphi = seg.curvature * t;
  const double chord_dir = p.heading() + 0.5 * dphi;
  const double half = 0.5 * dphi;
  const double chord = std::abs(half) < 1e-9 ? t : t * std::sin(half) / half;
  return {p.x() + chord * std::cos(chord_dir), p.y() + chord * std::sin(chord_dir), p.heading() + dphi};
}

}  // namespace

Course::Course(std::string id, std::vector<Segment> segments, double corridor_half_width, PlanarPose start)
    : id_(std::move(id)), segments_(std::move(segments)), corridor_half_width_(corridor_half_width) {
  if (segments_.empty()) throw InvalidArgument("course '" + id_ + "' has no segments");
  if (!(corridor_half_width_ > 0.0)) throw InvalidArgument("course corridor_half_width must be > 0");
  PlanarPose p = start;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& seg = segments_[i];
    if (!(seg.length > 0.0) || !std::isfinite(seg.length)) {
      throw InvalidArgument("course '" + id_ + "' segment " + std::to_string(i) + ": length must be > 0");
    }
    if (seg.type == SegmentType::kLine && seg.curvature != 0.0) {
      throw InvalidArgument("course '" + id_ + "' segment " + std::to_string(i) + ": line with curvature");
    }
    if (seg.type == SegmentType::kArc && (seg.curvature == 0.0 || !std::isfinite(seg.curvature))) {
      throw InvalidArgument("course '" + id_ + "' segment " + std::to_string(i) + ": arc needs curvature");
    }
    starts_.push_back(p);
    start_s_.push_back(total_length_);
    p = advance(p, seg, seg.length);
    total_length_ += seg.length;
  }
  closed_ = std::hypot(p.x() - start.x(), p.y() - start.y()) < 1e-6 &&
            std::abs(wrap_angle(p.heading() - start.heading())) < 1e-9;
}

double Course::wrap_s(double s) const {
  if (!closed_) return s;
  double w = std::fmod(s, total_length_);
  if (w < 0.0) w += total_length_;
  return w;
}

std::size_t Course::segment_index(double s) const {
  auto it = std::upper_bound(start_s_.begin(), start_s_.end(), s);
  if (it == start_s_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(start_s_.begin(), it)) - 1;
}

PlanarPose Course::pose_at(double s) const {
  s = wrap_s(s);
  if (s < 0.0) {
    const PlanarPose& p = starts_.front();
    return {p.x() + s * std::cos(p.heading()), p.y() + s * std::sin(p.heading()), p.heading()};
  }
  if (s >= total_length_) {
    const std::size_t last = segments_.size() - 1;
    const PlanarPose end = advance(starts_[last], segments_[last], segments_[last].length);
    const double extra = s - total_length_;
    return {end.x() + extra * std::cos(end.heading()), end.y() + extra * std::sin(end.heading()), end.heading()};
  }
  const std::size_t i = segment_index(s);
  return advance(starts_[i], segments_[i], s - start_s_[i]);
}

PlanarPose Course::offset_pose_at(double s, double lateral) const {
  const PlanarPose p = pose_at(s);
  return {p.x() - lateral * std::sin(p.heading()), p.y() + lateral * std::cos(p.heading()), p.heading()};
}

double Course::curvature_at(double s) const {
  s = wrap_s(s);
  if (s < 0.0 || s >= total_length_) return 0.0;
  return segments_[segment_index(s)].curvature;
}

Command Course::command_at(double s) const {
  s = wrap_s(s);
  if (s < 0.0) return segments_.front().command;
  if (s >= total_length_) return segments_.back().command;
  return segments_[segment_index(s)].command;
}

Projection Course::project(double x, double y) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& seg = segments_[i];
    const PlanarPose& p0 = starts_[i];
    double t = 0.0;
    if (seg.type == SegmentType::kLine) {
      const double ux = std::cos(p0.heading());
      const double uy = std::sin(p0.heading());
      t = std::clamp((x - p0.x()) * ux + (y - p0.y()) * uy, 0.0, seg.length);
    } else {
      const double radius = 1.0 / std::abs(seg.curvature);
      const double cx = p0.x() - std::sin(p0.heading()) / seg.curvature;
      const double cy = p0.y() + std::cos(p0.heading()) / seg.curvature;
      const double a0 = std::atan2(p0.y() - cy, p0.x() - cx);
      const double ap = std::atan2(y - cy, x - cx);
      const double sweep = seg.curvature > 0.0 ? ap - a0 : a0 - ap;
      double u = std::fmod(sweep, 2.0 * std::numbers::pi);
      if (u < 0.0) u += 2.0 * std::numbers::pi;
      t = u * radius;
      if (t > seg.length) {
        // Outside the arc's angular span: the nearer endpoint wins.
        const PlanarPose end = advance(p0, seg, seg.length);
        const double d_start = std::hypot(x - p0.x(), y - p0.y());
        const double d_end = std::hypot(x - end.x(), y - end.y());
        t = d_start <= d_end ? 0.0 : seg.length;
      }
    }
    const PlanarPose foot = advance(p0, seg, t);
    const double ex = x - foot.x();
    const double ey = y - foot.y();
    const double dist = std::hypot(ex, ey);
    if (dist < best.distance) {
      best.distance = dist;
      best.s = start_s_[i] + t;
      best.tangent = foot.heading();
      best.lateral = std::cos(foot.heading()) * ey - std::sin(foot.heading()) * ex;
    }
  }
  best.s = wrap_s(best.s);
  return best;
}

namespace {

Segment parse_segment(const nlohmann::json& j, std::size_t index) {
  const std::string where = "segment " + std::to_string(index);
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
  Segment seg;
  const std::string type = j.at("type").get<std::string>();
  if (type == "line") {
    seg.type = SegmentType::kLine;
  } else if (type == "arc") {
    seg.type = SegmentType::kArc;
  } else {
    throw InvalidArgument(where + ": unknown type '" + type + "'");
  }
  seg.length = j.at("length_m").get<double>();
  seg.curvature = j.value("curvature_per_m", 0.0);
  seg.command = command_from_letter(j.value("command", std::string("S")));
  return seg;
}

}  // namespace

Course parse_course_json(std::string_view text, const std::string& default_id) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("course JSON: " + std::string(e.what()));
  }
  try {
    std::string id = default_id;
    double half_width = kDefaultCorridorHalfWidth;
    const nlohmann::json* list = &doc;
    if (doc.is_object()) {
      id = doc.value("id", default_id);
      half_width = doc.value("corridor_half_width", kDefaultCorridorHalfWidth);
      list = &doc.at("segments");
    }
    if (!list->is_array()) throw InvalidArgument("course JSON: segments must be a list");
    std::vector<Segment> segments;
    for (std::size_t i = 0; i < list->size(); ++i) segments.push_back(parse_segment((*list)[i], i));
    return Course(id, std::move(segments), half_width);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("course JSON: " + std::string(e.what()));
  }
}

Course load_course(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open course file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  try {
    return parse_course_json(buf.str(), stem);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string course_to_json(const Course& course) {
  nlohmann::json segs = nlohmann::json::array();
  for (const Segment& s : course.segments()) {
    segs.push_back({{"type", s.type == SegmentType::kLine ? "line" : "arc"},
                    {"length_m", s.length},
                    {"curvature_per_m", s.curvature},
                    {"command", std::string(1, command_letter(s.command))}});
  }
  nlohmann::json doc = {
      {"id", course.id()}, {"corridor_half_width", course.corridor_half_width()}, {"segments", segs}};
  return doc.dump(2) + "\n";
}

Course make_loop_course(const std::string& id, double turn_radius, double first_straight) {
  const double quarter = 0.5 * std::numbers::pi * turn_radius;
  const double k = 1.0 / turn_radius;
  const auto line = [](double len) { return Segment{SegmentType::kLine, len, 0.0, Command::kStraight}; };
  const auto left = [&] { return Segment{SegmentType::kArc, quarter, k, Command::kLeft}; };
  const auto right = [&] { return Segment{SegmentType::kArc, quarter, -k, Command::kRight}; };
  // Closing the loop fixes the lengths of the two return straights.
  const double top = first_straight + 2.0 * turn_radius + 10.0;
  const double side = 2.0 * turn_radius + 40.0;
  return Course(id, {line(first_straight), left(), line(20.0), right(), line(10.0), left(), line(20.0), left(),
                     line(top), left(), line(side), left()});
}

Course builtin_course(std::string_view name) {
  if (name == "benchmark") return make_loop_course("benchmark", 15.0, 50.0);
  if (name == "gentle") return make_loop_course("gentle", 25.0, 60.0);
  if (name == "sharp") return make_loop_course("sharp", 10.0, 40.0);
  throw InvalidArgument("unknown builtin course '" + std::string(name) + "' (benchmark, gentle, sharp)");
}

Course resolve_course(const std::string& source) {
  constexpr std::string_view kPrefix = "builtin:";
  if (source.rfind(kPrefix, 0) == 0) return builtin_course(std::string_view(source).substr(kPrefix.size()));
  return load_course(source);
}

}  // namespace vosteer::course
