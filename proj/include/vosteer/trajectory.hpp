#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vosteer/course.hpp"
#include "vosteer/geometry.hpp"
#include "vosteer/observation.hpp"
#include "vosteer/parallel.hpp"
#include "vosteer/vehicle.hpp"

namespace vosteer::trajectory {

enum class Provenance { kGroundTruth, kNoisyVO, kFile };

const char* provenance_name(Provenance p);

struct Frame {
  double timestamp = 0.0;
  geometry::PlanarPose pose;
};

/// Timestamped pose sequence from one run. Construction enforces at least two
/// frames and strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory(int id, std::vector<Frame> frames, Provenance provenance);

  int id() const { return id_; }
  const std::vector<Frame>& frames() const { return frames_; }
  std::size_t size() const { return frames_.size(); }
  const Frame& operator[](std::size_t i) const { return frames_[i]; }
  Provenance provenance() const { return provenance_; }

  /// Planar speed at frame i from the adjacent frame displacement.
  double speed_at(std::size_t i) const;
  /// Path length along the frames.
  double path_length() const;

 private:
  int id_;
  std::vector<Frame> frames_;
  Provenance provenance_;
};

/// Reads "timestamp tx ty tz qx qy qz qw" lines ('#' comments and blank lines
/// are skipped). z, roll and pitch are dropped; heading is the quaternion yaw.
Trajectory load_tum(const std::string& path, int id);
Trajectory parse_tum(const std::string& text, int id, const std::string& source_name);
std::string format_tum(const Trajectory& traj);
void save_tum(const Trajectory& traj, const std::string& path);

/// Yaw of a unit quaternion (x, y, z, w).
double quaternion_yaw(double qx, double qy, double qz, double qw);

struct NoiseModel {
  double translation_sigma = 0.0;  // m per step, local frame
  double heading_sigma = 0.0;      // rad per step
  double drift_rate = 0.0;         // m of leftward bias per m travelled
  std::uint64_t seed = 0;

  bool is_zero() const { return translation_sigma == 0.0 && heading_sigma == 0.0 && drift_rate == 0.0; }
};

/// Perturbs every inter-frame relative motion and re-composes the poses from
/// the first frame, emulating visual-odometry drift.
Trajectory corrupt(const Trajectory& traj, const NoiseModel& noise);

using FramePair = std::pair<std::size_t, std::size_t>;

/// Greedy fixed-distance pairing: from each anchor, the first later frame whose
/// planar distance lies within dx_nominal*(1 -/+ tol) closes a pair and becomes
/// the next anchor. Overshooting the band restarts the chain at that frame.
std::vector<FramePair> pair_frames(const Trajectory& traj, double dx_nominal, double tol);

struct RouteMatch {
  double threshold = 5.0;         // m, max nearest-pose distance
  double violation_budget = 0.1;  // tolerated fraction of frames beyond threshold
};

/// Mean absolute lateral offset from every frame of `query` to its nearest
/// pose in `target`, measured in the query frame's local frame. Throws
/// IncompatibleRoutes when the route-match budget is exceeded.
double mean_abs_lateral_offset(const Trajectory& query, const Trajectory& target, const RouteMatch& match = {});

/// Id of the centermost trajectory: the one whose summed mean lateral offset to
/// all others is smallest (ties within 1e-12 relative go to the lowest id).
int select_reference(const std::vector<Trajectory>& trajs, const RouteMatch& match = {},
                     Execution exec = Execution::kParallel);

struct RelabeledMotion {
  std::size_t frame = 0;
  geometry::RelativeMotion motion;
};

/// Labels the chain anchors of `traj` with the local-frame vector to the next
/// reference pose roughly dx_nominal ahead. Anchors whose forward window
/// [0.5, 1.5]*dx_nominal holds no reference pose, or whose label falls outside
/// the dx tolerance band, are skipped.
std::vector<RelabeledMotion> relabel(const Trajectory& traj, const Trajectory& reference, double dx_nominal,
                                     double tol = 0.1, const RouteMatch& match = {});

/// Labels from a single trajectory's own pair chain: at each chain frame b
/// between pairs (a, b) and (b, c), local_motion(b - a, c - b).
std::vector<RelabeledMotion> chain_labels(const Trajectory& traj, double dx_nominal, double tol);

struct LabeledSample {
  std::size_t frame = 0;
  int traj_id = 0;
  observation::ObservationVector observation;
  geometry::RelativeMotion motion;
  double steer_label = 0.0;
};

struct DatasetConfig {
  double dx_nominal = 0.5;
  double tol = 0.1;
  double alpha = 0.0;  // 0 selects canonical_alpha(vehicle, dx_nominal)
  vehicle::VehicleParams vehicle;
  observation::ObservationConfig observation;
  RouteMatch route_match;

  double effective_alpha() const;
};

/// Reference selection, relabeling and observation attachment. Labels come
/// from `trajs`; observations are computed from `observed` (the ground-truth
/// poses the camera actually saw) when given, else from `trajs`. Samples are
/// ordered by input trajectory then frame.
std::vector<LabeledSample> build_dataset(const std::vector<Trajectory>& trajs, const course::Course& course,
                                         const DatasetConfig& config,
                                         const std::vector<Trajectory>* observed = nullptr);

/// CSV with header frame,traj_id,dx,dy,steer,command at 9 significant digits.
std::string dataset_to_csv(const std::vector<LabeledSample>& samples);

}  // namespace vosteer::trajectory
