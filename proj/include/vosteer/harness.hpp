#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vosteer/course.hpp"
#include "vosteer/observation.hpp"
#include "vosteer/parallel.hpp"
#include "vosteer/predictor.hpp"
#include "vosteer/trajectory.hpp"
#include "vosteer/vehicle.hpp"

namespace vosteer::harness {

enum class Dynamics { kKinematic, kDynamic };

const char* dynamics_name(Dynamics d);
Dynamics dynamics_from_name(std::string_view name);

// --- episodes ----------------------------------------------------------------

struct EpisodeConfig {
  double dt = 1.0 / 30.0;
  double duration = 60.0;           // s
  double target_speed = 5.0;        // m/s
  double speed_time_constant = 0.5;  // s, first-order throttle response
  double perturbation_pct = 0.0;    // uniform steering noise, fraction of max_steer
  double crash_factor = 3.0;        // crash-out beyond this many corridor half-widths
  Dynamics dynamics = Dynamics::kKinematic;
  double dx_nominal = 0.5;
  double alpha = 0.0;  // 0 selects canonical_alpha(vehicle, dx_nominal)
  vehicle::VehicleParams vehicle;
  std::uint64_t seed = 0;

  int steps() const;
  double effective_alpha() const;
  /// Throws InvalidArgument.
  void validate() const;
};

/// Placement of the car at the start of an episode relative to the course.
struct StartPose {
  double s = 0.0;
  double lateral = 0.0;         // m, left positive
  double heading_offset = 0.0;  // rad relative to the centerline tangent
};

/// `count` starts evenly spaced along the course, lateral offsets alternating
/// +lateral / -lateral, heading offsets uniform in +-heading_jitter.
std::vector<StartPose> evaluation_starts(const course::Course& course, int count, double lateral,
                                         double heading_jitter, std::uint64_t seed);

/// Maps the current state to a predicted dy. The key is unique per episode
/// step and seeds any stochastic observation corruption.
using Policy = std::function<double(const vehicle::VehicleState& state, std::uint64_t key)>;

Policy oracle_policy(const course::Course& course, double dx_nominal);

/// Observes the course, optionally corrupts the features, and runs the model.
Policy model_policy(std::shared_ptr<const predictor::RegressorModel> model, const course::Course& course,
                    const observation::ObservationConfig& obs_config,
                    std::optional<predictor::Corruption> corruption = std::nullopt);

struct EvalReport {
  double in_track_ratio = 0.0;
  double mean_abs_lateral_offset = 0.0;  // over the steps driven before any crash-out
  double max_abs_lateral_offset = 0.0;
  double mean_speed = 0.0;
  int steps = 0;
  int in_track_steps = 0;
  bool crashed = false;
  int crash_step = -1;
  std::string crash_reason;
  std::vector<geometry::PlanarPose> path;  // filled when requested
};

/// One closed-loop rollout. Never throws for off-course states: those end the
/// episode as a crash-out with the remaining steps counted out of track.
EvalReport run_episode(const course::Course& course, const Policy& policy, const StartPose& start,
                       const EpisodeConfig& config, bool record_path = false);

/// Episode k runs with seed mix(config.seed, k). Serial and parallel execution
/// return identical reports.
std::vector<EvalReport> evaluate_batch(const course::Course& course, const Policy& policy,
                                       const std::vector<StartPose>& starts, const EpisodeConfig& config,
                                       Execution exec = Execution::kParallel);

struct Summary {
  int episodes = 0;
  double mean_ratio = 0.0;
  double std_ratio = 0.0;  // population standard deviation
  double mean_abs_offset = 0.0;
  double max_abs_offset = 0.0;
  double mean_speed = 0.0;
  int crashes = 0;
};

Summary summarize(const std::vector<EvalReport>& reports);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

// --- training data -------------------------------------------------------------

struct GenerationConfig {
  int count = 8;
  double rate_hz = 100.0;
  double laps = 1.0;
  double max_offset_fraction = 0.8;  // of the corridor half-width
  double speed_min = 4.0;
  double speed_max = 6.0;
  double centerline_speed = 5.0;
  double wander_amplitude_min = 0.1;
  double wander_amplitude_max = 0.4;
  double wander_wavelength_min = 10.0;
  double wander_wavelength_max = 30.0;
  double preview_distance = 2.0;  // pure-pursuit lookahead of the data-collection driver
  bool identical = false;         // every trajectory is a copy of the centerline run
  trajectory::NoiseModel noise;   // applied to produce the odometry estimate
  vehicle::VehicleParams vehicle;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The path a data-collection driver aims for: a constant lateral offset plus
/// a sinusoidal wander, driven at constant speed.
struct DriverProfile {
  double offset = 0.0;
  double amplitude = 0.0;
  double wavelength = 1.0;
  double phase = 0.0;
  double speed = 5.0;

  double lateral_at(double s) const;
};

/// Profile i depends only on (seed, i), so the first N profiles of a larger
/// set are the N-profile set. Profile 0 is the plain centerline.
DriverProfile driver_profile(const GenerationConfig& config, double corridor_half_width, int index);

/// Drives one profile with a pure-pursuit controller and the kinematic model.
trajectory::Trajectory drive_profile(const course::Course& course, const DriverProfile& profile,
                                     const GenerationConfig& config, int id);

struct GeneratedRun {
  trajectory::Trajectory truth;
  trajectory::Trajectory odometry;  // truth when the noise model is zero
};

/// Trajectory i is seeded independently of the count, and its odometry noise
/// uses seed mix(noise.seed, i).
std::vector<GeneratedRun> generate_runs(const course::Course& course, const GenerationConfig& config,
                                        Execution exec = Execution::kParallel);

// --- pipeline ------------------------------------------------------------------

struct PipelineConfig {
  GenerationConfig generation;
  trajectory::DatasetConfig dataset;
  predictor::TrainConfig train;
  /// When positive, overrides train.epochs so that every model gets roughly
  /// this many optimizer steps regardless of dataset size.
  int train_steps = 0;
};

/// Epochs needed for `steps` optimizer steps at the given dataset and batch
/// size (at least 1).
int epochs_for_steps(std::size_t samples, int batch_size, int steps);

struct TrainedModel {
  std::shared_ptr<const predictor::RegressorModel> model;
  std::vector<double> epoch_loss;
  std::size_t samples = 0;
  int reference_id = 0;
  int trajectories = 0;
};

/// Generate runs, label them against the centermost run, train.
TrainedModel train_on_course(const course::Course& course, const PipelineConfig& config);

// --- sweeps --------------------------------------------------------------------

struct SweepConfig {
  PipelineConfig pipeline;
  EpisodeConfig episode;
  int starts = 20;
  double start_lateral = 0.4;
  double heading_jitter = 0.03490658503988659;  // 2 degrees
  int repeats = 10;
  Execution exec = Execution::kParallel;

  void validate() const;
};

struct EpisodeRow {
  std::string label;  // configuration key, e.g. "N=4" or "N=8,level=0.2"
  int trajectories = 0;
  double level = 0.0;   // perturbation fraction or target speed, sweep dependent
  int repeat = 0;
  int start = 0;
  Dynamics dynamics = Dynamics::kKinematic;
  EvalReport report;
};

struct SummaryRow {
  std::string label;
  int trajectories = 0;
  double level = 0.0;
  Dynamics dynamics = Dynamics::kKinematic;
  std::size_t samples = 0;
  Summary summary;
  double repeat_mean = 0.0;  // mean over repeats of the per-repeat mean ratio
  double repeat_std = 0.0;   // std over repeats of the per-repeat mean ratio
  std::string error;         // non-empty when this configuration failed
};

struct SweepResult {
  std::string name;
  std::vector<EpisodeRow> episodes;
  std::vector<SummaryRow> summary;
};

/// One model per N trained on the course, evaluated from off-center starts.
/// Pipeline failures are recorded as rows with an error message.
SweepResult sweep_trajectories(const course::Course& course, const std::vector<int>& counts,
                               const SweepConfig& config);

/// Perturbation levels in [0, 0.5]; `repeats` seeded repeats per (model, level),
/// each a batch of centerline starts.
SweepResult sweep_perturbation(const course::Course& course, const std::vector<double>& levels,
                               const std::vector<int>& model_counts, const SweepConfig& config);

/// Dynamic-model rollouts from centerline starts at each target speed, plus a
/// kinematic baseline at the configured episode speed.
SweepResult sweep_speed(const course::Course& course, const std::vector<double>& speeds,
                        const std::vector<int>& model_counts, const SweepConfig& config);

struct HeldoutResult {
  SweepResult sweep;
  Summary same_course;  // trained and evaluated on the training course
  Summary heldout;      // trained on the training course, evaluated on the test course
  Summary oracle;       // oracle on the test course
};

/// Multi-trajectory model (generation.count runs) trained on train_course.
/// Throws InvalidArgument when both courses share an id.
HeldoutResult eval_heldout(const course::Course& train_course, const course::Course& test_course,
                           const SweepConfig& config);

// --- reports -------------------------------------------------------------------

/// %.6g formatting used by every report.
std::string format_g6(double value);

std::string episodes_csv(const std::vector<EpisodeRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Course centerline, corridor edges and driven paths as an SVG document.
std::string render_svg(const course::Course& course, const std::vector<std::vector<geometry::PlanarPose>>& paths);

}  // namespace vosteer::harness
