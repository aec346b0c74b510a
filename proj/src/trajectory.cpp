#include "vosteer/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "nearest_index.hpp"
#include "vosteer/errors.hpp"

namespace vosteer::trajectory {

using geometry::PlanarPose;
using geometry::PlanarVec;

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kGroundTruth:
      return "ground_truth";
    case Provenance::kNoisyVO:
      return "noisy_vo";
    case Provenance::kFile:
      return "file";
  }
  return "unknown";
}

Trajectory::Trajectory(int id, std::vector<Frame> frames, Provenance provenance)
    : id_(id), frames_(std::move(frames)), provenance_(provenance) {
  if (frames_.size() < 2) {
    throw InvalidArgument("trajectory " + std::to_string(id_) + " needs at least 2 frames");
  }
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (!(frames_[i].timestamp > frames_[i - 1].timestamp)) {
      throw NonMonotonicTimestamps("trajectory " + std::to_string(id_) + ": timestamp at frame " +
                                   std::to_string(i) + " does not increase");
    }
  }
}

double Trajectory::speed_at(std::size_t i) const {
  const std::size_t a = i == 0 ? 0 : i - 1;
  const std::size_t b = i == 0 ? 1 : i;
  const PlanarVec d = geometry::displacement(frames_[a].pose, frames_[b].pose);
  return d.norm() / (frames_[b].timestamp - frames_[a].timestamp);
}

double Trajectory::path_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    total += geometry::displacement(frames_[i - 1].pose, frames_[i].pose).norm();
  }
  return total;
}

double quaternion_yaw(double qx, double qy, double qz, double qw) {
  return std::atan2(2.0 * (qw * qz + qx * qy), 1.0 - 2.0 * (qy * qy + qz * qz));
}

Trajectory parse_tum(const std::string& text, int id, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<Frame> frames;
  double last_stamp = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::vector<double> v;
    std::string token;
    while (fields >> token) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ParseError(source_name, line_no, "not a number: '" + token + "'");
      }
    }
    if (v.size() != 8) {
      throw ParseError(source_name, line_no,
                       "expected 8 fields (timestamp tx ty tz qx qy qz qw), got " + std::to_string(v.size()));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ParseError(source_name, line_no, "non-finite value");
    }
    if (!(v[0] > last_stamp)) {
      throw NonMonotonicTimestamps(source_name + ":" + std::to_string(line_no) + ": timestamp " +
                                   std::to_string(v[0]) + " does not increase");
    }
    last_stamp = v[0];
    frames.push_back({v[0], PlanarPose(v[1], v[2], quaternion_yaw(v[4], v[5], v[6], v[7]))});
  }
  if (frames.size() < 2) throw ParseError(source_name, line_no, "fewer than 2 poses");
  return Trajectory(id, std::move(frames), Provenance::kFile);
}

Trajectory load_tum(const std::string& path, int id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_tum(buf.str(), id, path);
}

std::string format_tum(const Trajectory& traj) {
  std::string out = "# timestamp tx ty tz qx qy qz qw\n";
  char line[256];
  for (const Frame& f : traj.frames()) {
    const double h = f.pose.heading();
    std::snprintf(line, sizeof line, "%.9f %.12g %.12g 0 0 0 %.12g %.12g\n", f.timestamp, f.pose.x(), f.pose.y(),
                  std::sin(0.5 * h), std::cos(0.5 * h));
    out += line;
  }
  return out;
}

void save_tum(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pose file '" + path + "'");
  out << format_tum(traj);
  if (!out) throw IoError("failed writing pose file '" + path + "'");
}

Trajectory corrupt(const Trajectory& traj, const NoiseModel& noise) {
  if (noise.translation_sigma < 0.0 || noise.heading_sigma < 0.0) {
    throw InvalidArgument("NoiseModel: sigmas must be >= 0");
  }
  if (noise.is_zero()) return Trajectory(traj.id(), traj.frames(), Provenance::kNoisyVO);

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Frame> out;
  out.reserve(traj.size());
  out.push_back(traj[0]);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const PlanarPose rel = geometry::relative_pose(traj[i - 1].pose, traj[i].pose);
    const double step = std::hypot(rel.x(), rel.y());
    const double nx = noise.translation_sigma * unit(rng);
    const double ny = noise.translation_sigma * unit(rng);
    const double nh = noise.heading_sigma * unit(rng);
    const PlanarPose noisy(rel.x() + nx, rel.y() + ny + noise.drift_rate * step, rel.heading() + nh);
    out.push_back({traj[i].timestamp, geometry::compose(out.back().pose, noisy)});
  }
  return Trajectory(traj.id(), std::move(out), Provenance::kNoisyVO);
}

std::vector<FramePair> pair_frames(const Trajectory& traj, double dx_nominal, double tol) {
  if (!(dx_nominal > 0.0)) throw InvalidArgument("pair_frames: dx_nominal must be > 0");
  if (!(tol >= 0.0 && tol < 1.0)) throw InvalidArgument("pair_frames: tol must be in [0, 1)");
  const double lo = dx_nominal * (1.0 - tol);
  const double hi = dx_nominal * (1.0 + tol);
  std::vector<FramePair> pairs;
  std::size_t anchor = 0;
  for (std::size_t j = 1; j < traj.size(); ++j) {
    const double d = geometry::displacement(traj[anchor].pose, traj[j].pose).norm();
    if (d < lo) continue;
    if (d <= hi) pairs.emplace_back(anchor, j);
    anchor = j;
  }
  return pairs;
}

std::vector<RelabeledMotion> chain_labels(const Trajectory& traj, double dx_nominal, double tol) {
  const std::vector<FramePair> pairs = pair_frames(traj, dx_nominal, tol);
  std::vector<RelabeledMotion> out;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k - 1];
    const auto [b2, c] = pairs[k];
    if (b != b2) continue;
    const PlanarVec prev = geometry::displacement(traj[a].pose, traj[b].pose);
    const PlanarVec next = geometry::displacement(traj[b].pose, traj[c].pose);
    out.push_back({b, geometry::local_motion(prev, next)});
  }
  return out;
}

namespace {

detail::NearestIndex index_of(const Trajectory& t) {
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(t.size());
  ys.reserve(t.size());
  for (const Frame& f : t.frames()) {
    xs.push_back(f.pose.x());
    ys.push_back(f.pose.y());
  }
  return detail::NearestIndex(std::move(xs), std::move(ys));
}

void check_budget(std::size_t violations, std::size_t total, const RouteMatch& match, int query_id, int target_id) {
  if (static_cast<double>(violations) > match.violation_budget * static_cast<double>(total)) {
    throw IncompatibleRoutes("trajectory " + std::to_string(query_id) + " is farther than " +
                             std::to_string(match.threshold) + " m from trajectory " + std::to_string(target_id) +
                             " on " + std::to_string(violations) + " of " + std::to_string(total) + " frames");
  }
}

double mean_abs_lateral_offset_indexed(const Trajectory& query, const Trajectory& target,
                                       const detail::NearestIndex& index, const RouteMatch& match) {
  double sum = 0.0;
  std::size_t matched = 0;
  std::size_t violations = 0;
  for (const Frame& f : query.frames()) {
    const auto hit = index.nearest(f.pose.x(), f.pose.y(), match.threshold);
    if (hit.index == detail::NearestIndex::kNone) {
      ++violations;
      continue;
    }
    const PlanarVec d = geometry::displacement(f.pose, target[hit.index].pose);
    const double lateral = geometry::rotate(d, -f.pose.heading()).vy;
    sum += std::abs(lateral);
    ++matched;
  }
  check_budget(violations, query.size(), match, query.id(), target.id());
  return matched == 0 ? 0.0 : sum / static_cast<double>(matched);
}

}  // namespace

double mean_abs_lateral_offset(const Trajectory& query, const Trajectory& target, const RouteMatch& match) {
  return mean_abs_lateral_offset_indexed(query, target, index_of(target), match);
}

int select_reference(const std::vector<Trajectory>& trajs, const RouteMatch& match, Execution exec) {
  if (trajs.empty()) throw InvalidArgument("select_reference: no trajectories");
  const std::size_t n = trajs.size();
  if (n == 1) return trajs.front().id();

  std::vector<detail::NearestIndex> indices;
  indices.reserve(n);
  for (const Trajectory& t : trajs) indices.push_back(index_of(t));

  // offsets[i*n + j]: mean |lateral| from trajectory i to trajectory j.
  std::vector<double> offsets(n * n, 0.0);
  std::vector<std::string> errors(n * n);
  const auto cell = [&](std::size_t k) {
    const std::size_t i = k / n;
    const std::size_t j = k % n;
    if (i == j) return;
    try {
      offsets[k] = mean_abs_lateral_offset_indexed(trajs[i], trajs[j], indices[j], match);
    } catch (const IncompatibleRoutes& e) {
      errors[k] = e.what();
    }
  };
  const auto cells = static_cast<long long>(n * n);
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < cells; ++k) cell(static_cast<std::size_t>(k));
  } else {
    for (long long k = 0; k < cells; ++k) cell(static_cast<std::size_t>(k));
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw IncompatibleRoutes(e);
  }

  const auto row_sum = [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += offsets[i * n + j];
    return sum;
  };
  std::size_t best = 0;
  double best_sum = row_sum(0);
  for (std::size_t i = 1; i < n; ++i) {
    const double sum = row_sum(i);
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(best_sum));
    if (sum < best_sum - tie_tol) {
      best = i;
      best_sum = sum;
    } else if (std::abs(sum - best_sum) <= tie_tol && trajs[i].id() < trajs[best].id()) {
      best = i;
      best_sum = std::min(sum, best_sum);
    }
  }
  return trajs[best].id();
}

std::vector<RelabeledMotion> relabel(const Trajectory& traj, const Trajectory& reference, double dx_nominal,
                                     double tol, const RouteMatch& match) {
  if (!(dx_nominal > 0.0)) throw InvalidArgument("relabel: dx_nominal must be > 0");
  const double lo = dx_nominal * (1.0 - tol);
  const double hi = dx_nominal * (1.0 + tol);
  const double window_hi = 1.5 * dx_nominal;
  const detail::NearestIndex index = index_of(reference);
  const std::vector<FramePair> pairs = pair_frames(traj, dx_nominal, tol);

  std::vector<RelabeledMotion> out;
  std::size_t anchors = 0;
  std::size_t violations = 0;
  for (const auto& [a, f] : pairs) {
    ++anchors;
    const PlanarPose& here = traj[f].pose;
    const PlanarVec prev = geometry::displacement(traj[a].pose, here);
    const auto hit = index.nearest(here.x(), here.y(), match.threshold);
    if (hit.index == detail::NearestIndex::kNone) {
      ++violations;
      continue;
    }
    const double norm = prev.norm();
    if (!(norm > geometry::kEpsilonZero)) continue;
    const PlanarVec forward{prev.vx / norm, prev.vy / norm};

    // Walk the reference forward from the nearest pose to the first pose at
    // least lo ahead; give up once the walk leaves the forward window.
    const double walk_limit = 2.0 * window_hi + std::sqrt(hit.dist2);
    double walked = 0.0;
    std::size_t target = detail::NearestIndex::kNone;
    for (std::size_t j = hit.index; j < reference.size(); ++j) {
      if (j > hit.index) {
        walked += geometry::displacement(reference[j - 1].pose, reference[j].pose).norm();
        if (walked > walk_limit) break;
      }
      const PlanarVec d = geometry::displacement(here, reference[j].pose);
      const double ahead = d.vx * forward.vx + d.vy * forward.vy;
      if (ahead > window_hi) break;
      if (ahead >= lo) {
        target = j;
        break;
      }
    }
    if (target == detail::NearestIndex::kNone) continue;
    const geometry::RelativeMotion m =
        geometry::local_motion(prev, geometry::displacement(here, reference[target].pose));
    if (m.dx < lo || m.dx > hi) continue;
    out.push_back({f, m});
  }
  check_budget(violations, anchors, match, traj.id(), reference.id());
  return out;
}

double DatasetConfig::effective_alpha() const {
  return alpha > 0.0 ? alpha : vehicle::canonical_alpha(vehicle, dx_nominal);
}

std::vector<LabeledSample> build_dataset(const std::vector<Trajectory>& trajs, const course::Course& course,
                                         const DatasetConfig& config, const std::vector<Trajectory>* observed) {
  if (trajs.empty()) throw InvalidArgument("build_dataset: no trajectories");
  if (observed != nullptr && observed->size() != trajs.size()) {
    throw InvalidArgument("build_dataset: observation trajectories do not match label trajectories");
  }
  const int ref_id = select_reference(trajs, config.route_match);
  const auto ref_it = std::find_if(trajs.begin(), trajs.end(), [&](const Trajectory& t) { return t.id() == ref_id; });
  const Trajectory& reference = *ref_it;
  const double alpha = config.effective_alpha();

  std::vector<LabeledSample> samples;
  for (std::size_t t = 0; t < trajs.size(); ++t) {
    const Trajectory& traj = trajs[t];
    const Trajectory& seen = observed != nullptr ? (*observed)[t] : traj;
    if (seen.size() != traj.size()) {
      throw InvalidArgument("build_dataset: observation trajectory " + std::to_string(seen.id()) +
                            " has a different frame count");
    }
    for (const RelabeledMotion& r : relabel(traj, reference, config.dx_nominal, config.tol, config.route_match)) {
      vehicle::VehicleState state;
      state.pose = seen[r.frame].pose;
      state.speed = seen.speed_at(r.frame);
      LabeledSample s;
      s.frame = r.frame;
      s.traj_id = traj.id();
      s.observation = observation::observe(state, course, config.observation);
      s.motion = r.motion;
      s.steer_label = vehicle::steering_from_lateral(r.motion.dy, alpha);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

std::string dataset_to_csv(const std::vector<LabeledSample>& samples) {
  std::string out = "frame,traj_id,dx,dy,steer,command\n";
  char line[192];
  for (const LabeledSample& s : samples) {
    std::snprintf(line, sizeof line, "%zu,%d,%.9g,%.9g,%.9g,%c\n", s.frame, s.traj_id, s.motion.dx, s.motion.dy,
                  s.steer_label, course::command_letter(observation::from_one_hot(s.observation.command)));
    out += line;
  }
  return out;
}

}  // namespace vosteer::trajectory
