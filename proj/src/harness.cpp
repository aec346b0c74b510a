#include "vosteer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "vosteer/errors.hpp"
#include "vosteer/rng.hpp"

namespace vosteer::harness {

using course::Course;
using geometry::PlanarPose;
using vehicle::VehicleState;

namespace {

// Keys that separate the random streams derived from one user seed.
constexpr std::uint64_t kStartStream = 0x51a47;
constexpr std::uint64_t kPerturbStream = 0x9e47;
constexpr std::uint64_t kOffsetPairStream = 0x0ff5e7;

}  // namespace

const char* dynamics_name(Dynamics d) { return d == Dynamics::kDynamic ? "dynamic" : "kinematic"; }

Dynamics dynamics_from_name(std::string_view name) {
  if (name == "kinematic") return Dynamics::kKinematic;
  if (name == "dynamic") return Dynamics::kDynamic;
  throw InvalidArgument("unknown dynamics '" + std::string(name) + "' (expected kinematic or dynamic)");
}

int EpisodeConfig::steps() const { return static_cast<int>(std::floor(duration / dt + 1e-9)); }

double EpisodeConfig::effective_alpha() const {
  return alpha > 0.0 ? alpha : vehicle::canonical_alpha(vehicle, dx_nominal);
}

void EpisodeConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("episode: dt must be > 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidArgument("episode: duration must be > 0");
  if (steps() < 1) throw InvalidArgument("episode: duration shorter than one time step");
  if (!(target_speed > 0.0)) throw InvalidArgument("episode: target_speed must be > 0");
  if (!(speed_time_constant > 0.0)) throw InvalidArgument("episode: speed_time_constant must be > 0");
  if (!(perturbation_pct >= 0.0)) throw InvalidArgument("episode: perturbation_pct must be >= 0");
  if (!(crash_factor >= 1.0)) throw InvalidArgument("episode: crash_factor must be >= 1");
  if (!(dx_nominal > 0.0)) throw InvalidArgument("episode: dx_nominal must be > 0");
  if (alpha < 0.0) throw InvalidArgument("episode: alpha must be >= 0");
  vehicle.validate();
}

std::vector<StartPose> evaluation_starts(const Course& course, int count, double lateral, double heading_jitter,
                                         std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("evaluation_starts: count must be >= 1");
  if (!(heading_jitter >= 0.0)) throw InvalidArgument("evaluation_starts: heading_jitter must be >= 0");
  std::mt19937_64 rng(rng::mix(seed, kStartStream));
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  // Open courses keep the last start away from the far end.
  const double usable = course.closed() ? course.length() : 0.5 * course.length();
  std::vector<StartPose> starts;
  for (int k = 0; k < count; ++k) {
    StartPose p;
    p.s = usable * static_cast<double>(k) / static_cast<double>(count);
    p.lateral = k % 2 == 0 ? lateral : -lateral;
    p.heading_offset = heading_jitter * jitter(rng);
    starts.push_back(p);
  }
  return starts;
}

Policy oracle_policy(const Course& course, double dx_nominal) {
  const predictor::DyPredictor oracle = predictor::oracle_predictor(course, dx_nominal);
  return [oracle](const VehicleState& state, std::uint64_t) { return oracle(state); };
}

Policy model_policy(std::shared_ptr<const predictor::RegressorModel> model, const Course& course,
                    const observation::ObservationConfig& obs_config,
                    std::optional<predictor::Corruption> corruption) {
  if (!model) throw InvalidArgument("model_policy: null model");
  if (obs_config.feature_dim() != model->shape().input_dim) {
    throw ShapeMismatch("model expects " + std::to_string(model->shape().input_dim) +
                        " features but the observation config yields " + std::to_string(obs_config.feature_dim()));
  }
  return [model, course, obs_config, corruption](const VehicleState& state, std::uint64_t key) {
    observation::ObservationVector obs = observation::observe(state, course, obs_config);
    if (corruption) obs = corruption->apply(obs, key);
    return predictor::predict_dy(*model, obs);
  };
}

EvalReport run_episode(const Course& course, const Policy& policy, const StartPose& start,
                       const EpisodeConfig& config, bool record_path) {
  config.validate();
  const int steps = config.steps();
  const double alpha = config.effective_alpha();
  const double half_width = course.corridor_half_width();
  const double crash_bound = config.crash_factor * half_width;
  const double max_steer = config.vehicle.max_steer;
  const double throttle_gain = 1.0 - std::exp(-config.dt / config.speed_time_constant);

  const PlanarPose origin = course.offset_pose_at(start.s, start.lateral);
  VehicleState state;
  state.pose = PlanarPose(origin.x(), origin.y(), geometry::wrap_angle(origin.heading() + start.heading_offset));
  state.speed = config.target_speed;

  std::mt19937_64 rng(rng::mix(config.seed, kPerturbStream));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  EvalReport report;
  report.steps = steps;
  double offset_sum = 0.0;
  double speed_sum = 0.0;
  int driven = 0;
  for (int k = 0; k < steps; ++k) {
    const course::Projection proj = course.project(state.pose.x(), state.pose.y());
    const double offset = std::abs(proj.lateral);
    const double heading_error = std::abs(geometry::wrap_angle(state.pose.heading() - proj.tangent));
    if (offset > crash_bound || heading_error > 0.5 * std::numbers::pi) {
      report.crashed = true;
      report.crash_step = k;
      report.crash_reason = offset > crash_bound ? "left the recovery bound" : "facing the wrong way";
      break;
    }
    if (offset <= half_width) ++report.in_track_steps;
    offset_sum += offset;
    speed_sum += state.speed;
    report.max_abs_lateral_offset = std::max(report.max_abs_lateral_offset, offset);
    ++driven;
    if (record_path) report.path.push_back(state.pose);

    double dy = 0.0;
    try {
      dy = policy(state, rng::mix(config.seed, static_cast<std::uint64_t>(k)));
    } catch (const OffCourse&) {
      report.crashed = true;
      report.crash_step = k + 1;
      report.crash_reason = "off course";
      break;
    }
    const double noise = config.perturbation_pct * max_steer * unit(rng);
    double steer = std::atan(alpha * dy) + noise;
    if (!std::isfinite(steer)) steer = 0.0;
    steer = std::clamp(steer, -max_steer, max_steer);
    const double throttle = state.speed + (config.target_speed - state.speed) * throttle_gain;
    if (config.dynamics == Dynamics::kDynamic) {
      state = vehicle::step_dynamic(state, steer, throttle, config.dt, config.vehicle);
    } else {
      state = vehicle::step_kinematic(state, steer, throttle, config.dt, config.vehicle).state;
    }
  }
  if (record_path && !report.crashed) report.path.push_back(state.pose);  // where the last step ended
  report.in_track_ratio = static_cast<double>(report.in_track_steps) / static_cast<double>(steps);
  if (driven > 0) {
    report.mean_abs_lateral_offset = offset_sum / driven;
    report.mean_speed = speed_sum / driven;
  }
  return report;
}

std::vector<EvalReport> evaluate_batch(const Course& course, const Policy& policy,
                                       const std::vector<StartPose>& starts, const EpisodeConfig& config,
                                       Execution exec) {
  config.validate();
  std::vector<EvalReport> reports(starts.size());
  const auto run = [&](std::size_t k) {
    EpisodeConfig episode = config;
    episode.seed = rng::mix(config.seed, k);
    reports[k] = run_episode(course, policy, starts[k], episode);
  };
  const auto n = static_cast<long long>(starts.size());
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  } else {
    for (long long k = 0; k < n; ++k) run(static_cast<std::size_t>(k));
  }
  return reports;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

Summary summarize(const std::vector<EvalReport>& reports) {
  Summary s;
  s.episodes = static_cast<int>(reports.size());
  if (reports.empty()) return s;
  std::vector<double> ratios;
  for (const EvalReport& r : reports) {
    ratios.push_back(r.in_track_ratio);
    s.mean_abs_offset += r.mean_abs_lateral_offset;
    s.max_abs_offset = std::max(s.max_abs_offset, r.max_abs_lateral_offset);
    s.mean_speed += r.mean_speed;
    if (r.crashed) ++s.crashes;
  }
  std::tie(s.mean_ratio, s.std_ratio) = mean_std(ratios);
  s.mean_abs_offset /= static_cast<double>(reports.size());
  s.mean_speed /= static_cast<double>(reports.size());
  return s;
}

// --- training data -------------------------------------------------------------

void GenerationConfig::validate() const {
  if (count < 1) throw InvalidArgument("generation: count must be >= 1");
  if (!(rate_hz > 0.0)) throw InvalidArgument("generation: rate_hz must be > 0");
  if (!(laps > 0.0)) throw InvalidArgument("generation: laps must be > 0");
  if (!(max_offset_fraction >= 0.0 && max_offset_fraction <= 1.0)) {
    throw InvalidArgument("generation: max_offset_fraction must be in [0, 1]");
  }
  if (!(speed_min > 0.0 && speed_max >= speed_min)) throw InvalidArgument("generation: need 0 < speed_min <= speed_max");
  if (!(centerline_speed > 0.0)) throw InvalidArgument("generation: centerline_speed must be > 0");
  if (!(wander_amplitude_min >= 0.0 && wander_amplitude_max >= wander_amplitude_min)) {
    throw InvalidArgument("generation: need 0 <= wander_amplitude_min <= wander_amplitude_max");
  }
  if (!(wander_wavelength_min > 0.0 && wander_wavelength_max >= wander_wavelength_min)) {
    throw InvalidArgument("generation: need 0 < wander_wavelength_min <= wander_wavelength_max");
  }
  if (!(preview_distance > 0.0)) throw InvalidArgument("generation: preview_distance must be > 0");
  vehicle.validate();
}

double DriverProfile::lateral_at(double s) const {
  return offset + amplitude * std::sin(2.0 * std::numbers::pi * s / wavelength + phase);
}

DriverProfile driver_profile(const GenerationConfig& config, double corridor_half_width, int index) {
  DriverProfile p;
  p.speed = config.centerline_speed;
  if (index == 0 || config.identical) return p;
  std::mt19937_64 rng(rng::mix(config.seed, static_cast<std::uint64_t>(index)));
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  if (index == 1) {
    // A second centerline run at its own speed keeps the bundle's median on
    // the centerline for every count >= 2.
    p.speed = uniform(config.speed_min, config.speed_max);
    return p;
  }
  // The rest come in mirrored pairs (2, 3), (4, 5), ...: each member is still
  // uniform in +-bound, but the set stays balanced about the centerline.
  const auto pair = static_cast<std::uint64_t>(index / 2);
  std::mt19937_64 pair_rng(rng::mix(rng::mix(config.seed, kOffsetPairStream), pair));
  const double bound = config.max_offset_fraction * corridor_half_width;
  const double magnitude = std::uniform_real_distribution<double>(-bound, bound)(pair_rng);
  p.offset = index % 2 == 0 ? magnitude : -magnitude;
  p.amplitude = uniform(config.wander_amplitude_min, config.wander_amplitude_max);
  p.wavelength = uniform(config.wander_wavelength_min, config.wander_wavelength_max);
  p.phase = uniform(0.0, 2.0 * std::numbers::pi);
  p.speed = uniform(config.speed_min, config.speed_max);
  return p;
}

trajectory::Trajectory drive_profile(const Course& course, const DriverProfile& profile,
                                     const GenerationConfig& config, int id) {
  const double dt = 1.0 / config.rate_hz;
  const auto steps = static_cast<std::size_t>(std::ceil(config.laps * course.length() / profile.speed / dt)) + 1;
  const vehicle::VehicleParams& vp = config.vehicle;

  VehicleState state;
  state.pose = course.offset_pose_at(0.0, profile.lateral_at(0.0));
  state.speed = profile.speed;
  double s_unwrapped = 0.0;
  double s_prev = 0.0;

  std::vector<trajectory::Frame> frames;
  frames.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    frames.push_back({static_cast<double>(k) * dt, state.pose});
    const course::Projection proj = course.project(state.pose.x(), state.pose.y());
    double ds = proj.s - s_prev;
    if (course.closed()) {
      if (ds < -0.5 * course.length()) ds += course.length();
      if (ds > 0.5 * course.length()) ds -= course.length();
    }
    s_unwrapped += ds;
    s_prev = proj.s;

    const double s_target = s_unwrapped + config.preview_distance;
    const PlanarPose target = course.offset_pose_at(s_target, profile.lateral_at(s_target));
    const geometry::PlanarVec d = geometry::rotate(geometry::displacement(state.pose, target), -state.pose.heading());
    const double reach2 = d.vx * d.vx + d.vy * d.vy;
    const double curvature = reach2 > geometry::kEpsilonZero ? 2.0 * d.vy / reach2 : 0.0;
    const double steer = std::clamp(std::atan(vp.wheelbase * curvature), -vp.max_steer, vp.max_steer);
    state = vehicle::step_kinematic(state, steer, profile.speed, dt, vp).state;
  }
  return trajectory::Trajectory(id, std::move(frames), trajectory::Provenance::kGroundTruth);
}

std::vector<GeneratedRun> generate_runs(const Course& course, const GenerationConfig& config, Execution exec) {
  config.validate();
  std::vector<std::optional<GeneratedRun>> runs(static_cast<std::size_t>(config.count));
  const auto make = [&](int i) {
    const DriverProfile profile = driver_profile(config, course.corridor_half_width(), i);
    trajectory::Trajectory truth = drive_profile(course, profile, config, i);
    trajectory::NoiseModel noise = config.noise;
    noise.seed = rng::mix(config.noise.seed, static_cast<std::uint64_t>(i));
    trajectory::Trajectory odometry = trajectory::corrupt(truth, noise);
    runs[static_cast<std::size_t>(i)].emplace(GeneratedRun{std::move(truth), std::move(odometry)});
  };
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < config.count; ++i) make(i);
  } else {
    for (int i = 0; i < config.count; ++i) make(i);
  }
  std::vector<GeneratedRun> out;
  out.reserve(runs.size());
  for (auto& r : runs) out.push_back(std::move(*r));
  return out;
}

// --- pipeline ------------------------------------------------------------------

int epochs_for_steps(std::size_t samples, int batch_size, int steps) {
  if (batch_size < 1) throw InvalidArgument("epochs_for_steps: batch_size must be >= 1");
  const std::size_t per_epoch = (samples + static_cast<std::size_t>(batch_size) - 1) / static_cast<std::size_t>(batch_size);
  if (per_epoch == 0 || steps <= 0) return 1;
  return std::max(1, static_cast<int>((static_cast<std::size_t>(steps) + per_epoch - 1) / per_epoch));
}

TrainedModel train_on_course(const Course& course, const PipelineConfig& config) {
  const std::vector<GeneratedRun> runs = generate_runs(course, config.generation, Execution::kSerial);
  std::vector<trajectory::Trajectory> odometry;
  std::vector<trajectory::Trajectory> truth;
  for (const GeneratedRun& r : runs) {
    odometry.push_back(r.odometry);
    truth.push_back(r.truth);
  }
  const std::vector<trajectory::LabeledSample> samples =
      trajectory::build_dataset(odometry, course, config.dataset, &truth);

  predictor::TrainConfig tc = config.train;
  tc.shape.input_dim = config.dataset.observation.feature_dim();
  if (config.train_steps > 0) tc.epochs = epochs_for_steps(samples.size(), tc.batch_size, config.train_steps);
  predictor::TrainResult trained = predictor::train(samples, tc);

  TrainedModel out;
  out.model = std::make_shared<const predictor::RegressorModel>(std::move(trained.model));
  out.epoch_loss = std::move(trained.epoch_loss);
  out.samples = samples.size();
  out.reference_id = trajectory::select_reference(odometry, config.dataset.route_match, Execution::kSerial);
  out.trajectories = config.generation.count;
  return out;
}

// --- sweeps --------------------------------------------------------------------

void SweepConfig::validate() const {
  episode.validate();
  pipeline.generation.validate();
  pipeline.train.validate();
  if (starts < 1) throw InvalidArgument("sweep: starts must be >= 1");
  if (repeats < 1) throw InvalidArgument("sweep: repeats must be >= 1");
  if (!(start_lateral >= 0.0)) throw InvalidArgument("sweep: start_lateral must be >= 0");
  if (!(heading_jitter >= 0.0)) throw InvalidArgument("sweep: heading_jitter must be >= 0");
}

namespace {

std::string count_label(int n) { return "N=" + std::to_string(n); }

// Trains one model per distinct count, in parallel when allowed. Failures are
// kept as messages so the sweep can report them per configuration.
struct ModelSlot {
  int count = 0;
  std::optional<TrainedModel> model;
  std::string error;
};

std::vector<ModelSlot> train_models(const Course& course, const std::vector<int>& counts, const SweepConfig& config) {
  std::vector<ModelSlot> slots(counts.size());
  const auto fit = [&](std::size_t i) {
    slots[i].count = counts[i];
    try {
      PipelineConfig pc = config.pipeline;
      pc.generation.count = counts[i];
      slots[i].model = train_on_course(course, pc);
    } catch (const Error& e) {
      slots[i].error = e.what();
    }
  };
  const auto n = static_cast<long long>(counts.size());
  if (config.exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < n; ++i) fit(static_cast<std::size_t>(i));
  } else {
    for (long long i = 0; i < n; ++i) fit(static_cast<std::size_t>(i));
  }
  return slots;
}

// A unit of evaluation work: one batch of starts for one configuration.
struct Job {
  std::size_t slot = 0;
  SummaryRow row;
  EpisodeConfig episode;
  std::vector<StartPose> starts;
  int repeat = 0;
  std::vector<EvalReport> reports;
};

void run_jobs(const Course& course, const std::vector<ModelSlot>& slots, std::vector<Job>& jobs,
              const SweepConfig& config) {
  const observation::ObservationConfig& obs = config.pipeline.dataset.observation;
  const auto run = [&](std::size_t j) {
    Job& job = jobs[j];
    const ModelSlot& slot = slots[job.slot];
    if (!slot.model) return;
    const Policy policy = model_policy(slot.model->model, course, obs);
    job.reports = evaluate_batch(course, policy, job.starts, job.episode, Execution::kSerial);
  };
  const auto n = static_cast<long long>(jobs.size());
  if (config.exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long j = 0; j < n; ++j) run(static_cast<std::size_t>(j));
  } else {
    for (long long j = 0; j < n; ++j) run(static_cast<std::size_t>(j));
  }
}

// Groups consecutive jobs sharing a label into one summary row.
SweepResult collect(std::string name, const std::vector<ModelSlot>& slots, const std::vector<Job>& jobs) {
  SweepResult result;
  result.name = std::move(name);
  std::size_t j = 0;
  while (j < jobs.size()) {
    std::size_t end = j;
    while (end < jobs.size() && jobs[end].row.label == jobs[j].row.label) ++end;
    SummaryRow row = jobs[j].row;
    const ModelSlot& slot = slots[jobs[j].slot];
    if (!slot.model) {
      row.error = slot.error;
    } else {
      row.samples = slot.model->samples;
      std::vector<EvalReport> all;
      std::vector<double> repeat_means;
      for (std::size_t k = j; k < end; ++k) {
        const Job& job = jobs[k];
        for (std::size_t s = 0; s < job.reports.size(); ++s) {
          EpisodeRow er;
          er.label = job.row.label;
          er.trajectories = job.row.trajectories;
          er.level = job.row.level;
          er.repeat = job.repeat;
          er.start = static_cast<int>(s);
          er.dynamics = job.row.dynamics;
          er.report = job.reports[s];
          result.episodes.push_back(std::move(er));
          all.push_back(job.reports[s]);
        }
        repeat_means.push_back(summarize(job.reports).mean_ratio);
      }
      row.summary = summarize(all);
      std::tie(row.repeat_mean, row.repeat_std) = mean_std(repeat_means);
    }
    result.summary.push_back(std::move(row));
    j = end;
  }
  return result;
}

}  // namespace

SweepResult sweep_trajectories(const Course& course, const std::vector<int>& counts, const SweepConfig& config) {
  config.validate();
  if (counts.empty()) throw InvalidArgument("sweep_trajectories: no counts given");
  for (int n : counts) {
    if (n < 1) throw InvalidArgument("sweep_trajectories: counts must be >= 1");
  }
  const std::vector<ModelSlot> slots = train_models(course, counts, config);
  const std::vector<StartPose> starts =
      evaluation_starts(course, config.starts, config.start_lateral, config.heading_jitter, config.episode.seed);
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    Job job;
    job.slot = i;
    job.row.label = count_label(counts[i]);
    job.row.trajectories = counts[i];
    job.row.dynamics = config.episode.dynamics;
    job.episode = config.episode;
    job.starts = starts;
    jobs.push_back(std::move(job));
  }
  run_jobs(course, slots, jobs, config);
  return collect("trajectories", slots, jobs);
}

SweepResult sweep_perturbation(const Course& course, const std::vector<double>& levels,
                               const std::vector<int>& model_counts, const SweepConfig& config) {
  config.validate();
  if (levels.empty() || model_counts.empty()) throw InvalidArgument("sweep_perturbation: empty levels or models");
  for (double level : levels) {
    if (!(level >= 0.0 && level <= 0.5)) throw InvalidArgument("sweep_perturbation: levels must be in [0, 0.5]");
  }
  const std::vector<ModelSlot> slots = train_models(course, model_counts, config);
  const std::vector<StartPose> starts =
      evaluation_starts(course, config.starts, 0.0, config.heading_jitter, config.episode.seed);
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < model_counts.size(); ++i) {
    for (double level : levels) {
      for (int r = 0; r < config.repeats; ++r) {
        Job job;
        job.slot = i;
        job.row.label = count_label(model_counts[i]) + ",level=" + format_g6(level);
        job.row.trajectories = model_counts[i];
        job.row.level = level;
        job.row.dynamics = config.episode.dynamics;
        job.episode = config.episode;
        job.episode.perturbation_pct = level;
        job.episode.seed = rng::mix(config.episode.seed, static_cast<std::uint64_t>(r));
        job.starts = starts;
        job.repeat = r;
        jobs.push_back(std::move(job));
      }
    }
  }
  run_jobs(course, slots, jobs, config);
  return collect("perturbation", slots, jobs);
}

SweepResult sweep_speed(const Course& course, const std::vector<double>& speeds, const std::vector<int>& model_counts,
                        const SweepConfig& config) {
  config.validate();
  if (speeds.empty() || model_counts.empty()) throw InvalidArgument("sweep_speed: empty speeds or models");
  for (double v : speeds) {
    if (!(v > 0.0)) throw InvalidArgument("sweep_speed: speeds must be > 0");
  }
  const std::vector<ModelSlot> slots = train_models(course, model_counts, config);
  const std::vector<StartPose> starts =
      evaluation_starts(course, config.starts, 0.0, config.heading_jitter, config.episode.seed);
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < model_counts.size(); ++i) {
    Job base;
    base.slot = i;
    base.row.label = count_label(model_counts[i]) + ",speed=" + format_g6(config.episode.target_speed) + ",kinematic";
    base.row.trajectories = model_counts[i];
    base.row.level = config.episode.target_speed;
    base.row.dynamics = Dynamics::kKinematic;
    base.episode = config.episode;
    base.episode.dynamics = Dynamics::kKinematic;
    base.starts = starts;
    jobs.push_back(std::move(base));
    for (double v : speeds) {
      Job job;
      job.slot = i;
      job.row.label = count_label(model_counts[i]) + ",speed=" + format_g6(v) + ",dynamic";
      job.row.trajectories = model_counts[i];
      job.row.level = v;
      job.row.dynamics = Dynamics::kDynamic;
      job.episode = config.episode;
      job.episode.dynamics = Dynamics::kDynamic;
      job.episode.target_speed = v;
      job.starts = starts;
      jobs.push_back(std::move(job));
    }
  }
  run_jobs(course, slots, jobs, config);
  return collect("speed", slots, jobs);
}

HeldoutResult eval_heldout(const Course& train_course, const Course& test_course, const SweepConfig& config) {
  config.validate();
  if (train_course.id() == test_course.id()) {
    throw InvalidArgument("eval_heldout: training and test courses share the id '" + train_course.id() + "'");
  }
  const std::vector<ModelSlot> slots = train_models(train_course, {config.pipeline.generation.count}, config);
  const int n = config.pipeline.generation.count;

  std::vector<Job> same(1);
  same[0].row.label = count_label(n) + ",course=" + train_course.id();
  same[0].row.trajectories = n;
  same[0].row.dynamics = config.episode.dynamics;
  same[0].episode = config.episode;
  same[0].starts = evaluation_starts(train_course, config.starts, config.start_lateral, config.heading_jitter,
                                     config.episode.seed);
  run_jobs(train_course, slots, same, config);

  std::vector<Job> held(1);
  held[0].row = same[0].row;
  held[0].row.label = count_label(n) + ",course=" + test_course.id() + ",heldout";
  held[0].episode = config.episode;
  held[0].starts = evaluation_starts(test_course, config.starts, config.start_lateral, config.heading_jitter,
                                     config.episode.seed);
  run_jobs(test_course, slots, held, config);

  std::vector<Job> all;
  all.push_back(std::move(same[0]));
  all.push_back(std::move(held[0]));
  HeldoutResult out;
  out.sweep = collect("heldout", slots, all);

  const std::vector<EvalReport> oracle_reports =
      evaluate_batch(test_course, oracle_policy(test_course, config.episode.dx_nominal), all[1].starts,
                     config.episode, config.exec);
  SummaryRow oracle_row;
  oracle_row.label = "oracle,course=" + test_course.id();
  oracle_row.dynamics = config.episode.dynamics;
  oracle_row.summary = summarize(oracle_reports);
  oracle_row.repeat_mean = oracle_row.summary.mean_ratio;
  for (std::size_t s = 0; s < oracle_reports.size(); ++s) {
    EpisodeRow er;
    er.label = oracle_row.label;
    er.start = static_cast<int>(s);
    er.dynamics = oracle_row.dynamics;
    er.report = oracle_reports[s];
    out.sweep.episodes.push_back(std::move(er));
  }
  out.sweep.summary.push_back(oracle_row);

  if (out.sweep.summary[0].error.empty()) {
    out.same_course = out.sweep.summary[0].summary;
    out.heldout = out.sweep.summary[1].summary;
  } else {
    throw Error("eval_heldout: training failed: " + out.sweep.summary[0].error);
  }
  out.oracle = oracle_row.summary;
  return out;
}

// --- reports -------------------------------------------------------------------

std::string format_g6(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value == 0.0 ? 0.0 : value);
  return buf;
}

namespace {

std::string csv_field(const std::string& text) {
  std::string clean;
  for (char c : text) clean += (c == '\n' || c == '\r') ? ' ' : c;
  if (clean.find_first_of(",\"") == std::string::npos) return clean;
  std::string quoted = "\"";
  for (char c : clean) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

}  // namespace

std::string episodes_csv(const std::vector<EpisodeRow>& rows) {
  std::string out =
      "label,trajectories,level,repeat,start,dynamics,in_track_ratio,mean_abs_offset,max_abs_offset,mean_speed,"
      "steps,in_track_steps,crashed,crash_step\n";
  for (const EpisodeRow& r : rows) {
    const EvalReport& e = r.report;
    out += csv_field(r.label) + ',' + std::to_string(r.trajectories) + ',' + format_g6(r.level) + ',' +
           std::to_string(r.repeat) + ',' + std::to_string(r.start) + ',' + dynamics_name(r.dynamics) + ',' +
           format_g6(e.in_track_ratio) + ',' + format_g6(e.mean_abs_lateral_offset) + ',' +
           format_g6(e.max_abs_lateral_offset) + ',' + format_g6(e.mean_speed) + ',' + std::to_string(e.steps) +
           ',' + std::to_string(e.in_track_steps) + ',' + (e.crashed ? "1" : "0") + ',' +
           std::to_string(e.crash_step) + '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "label,trajectories,level,dynamics,samples,episodes,mean_ratio,std_ratio,repeat_mean,repeat_std,"
      "mean_abs_offset,max_abs_offset,mean_speed,crashes,error\n";
  for (const SummaryRow& r : rows) {
    const Summary& s = r.summary;
    out += csv_field(r.label) + ',' + std::to_string(r.trajectories) + ',' + format_g6(r.level) + ',' +
           dynamics_name(r.dynamics) + ',' + std::to_string(r.samples) + ',' + std::to_string(s.episodes) + ',' +
           format_g6(s.mean_ratio) + ',' + format_g6(s.std_ratio) + ',' + format_g6(r.repeat_mean) + ',' +
           format_g6(r.repeat_std) + ',' + format_g6(s.mean_abs_offset) + ',' + format_g6(s.max_abs_offset) + ',' +
           format_g6(s.mean_speed) + ',' + std::to_string(s.crashes) + ',' + csv_field(r.error) + '\n';
  }
  return out;
}

std::string render_svg(const Course& course, const std::vector<std::vector<PlanarPose>>& paths) {
  const double hw = course.corridor_half_width();
  const int samples = std::max(2, static_cast<int>(course.length() / 0.5));
  std::vector<PlanarPose> center;
  std::vector<PlanarPose> left;
  std::vector<PlanarPose> right;
  for (int i = 0; i <= samples; ++i) {
    const double s = course.length() * i / samples;
    center.push_back(course.pose_at(s));
    left.push_back(course.offset_pose_at(s, hw));
    right.push_back(course.offset_pose_at(s, -hw));
  }
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin;
  double xmax = -xmin;
  double ymax = -xmin;
  auto grow = [&](const std::vector<PlanarPose>& poly) {
    for (const PlanarPose& p : poly) {
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
  };
  grow(left);
  grow(right);
  for (const auto& p : paths) grow(p);
  const double margin = 2.0;
  const double scale = 4.0;  // px per m
  const double width = (xmax - xmin + 2 * margin) * scale;
  const double height = (ymax - ymin + 2 * margin) * scale;

  auto polyline = [&](const std::vector<PlanarPose>& poly, const char* style) {
    std::string out = "  <polyline fill=\"none\" " + std::string(style) + " points=\"";
    char buf[64];
    for (const PlanarPose& p : poly) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", (p.x() - xmin + margin) * scale,
                    (ymax - p.y() + margin) * scale);
      out += buf;
    }
    out += "\"/>\n";
    return out;
  };

  char header[256];
  std::snprintf(header, sizeof header,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                width, height, width, height);
  std::string svg = header;
  svg += "  <title>" + course.id() + "</title>\n";
  svg += polyline(left, "stroke=\"#888\" stroke-width=\"1\"");
  svg += polyline(right, "stroke=\"#888\" stroke-width=\"1\"");
  svg += polyline(center, "stroke=\"#bbb\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");
  static constexpr const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string style = std::string("stroke=\"") + kColors[i % std::size(kColors)] + "\" stroke-width=\"1.5\"";
    svg += polyline(paths[i], style.c_str());
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace vosteer::harness
