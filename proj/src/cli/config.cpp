#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "vosteer/cli.hpp"
#include "vosteer/rng.hpp"

namespace vosteer::cli {

using nlohmann::json;

namespace {

// Sub-seed stream keys.
constexpr std::uint64_t kGenerationSeed = 1;
constexpr std::uint64_t kNoiseSeed = 2;
constexpr std::uint64_t kTrainSeed = 3;
constexpr std::uint64_t kEpisodeSeed = 4;
constexpr std::uint64_t kCorruptionSeed = 5;

// Reads keys from one JSON object and rejects any key it was not asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ValidationError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& dst) {
    seen_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      dst = it->template get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: '" + where(key) + "' has the wrong type");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(node_.at(key), where(key));
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ValidationError("config: unknown key '" + where(key) + "'");
    }
  }

 private:
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_vehicle(Section s, vehicle::VehicleParams& v) {
  s.read("wheelbase", v.wheelbase);
  s.read("track_width", v.track_width);
  s.read("max_steer", v.max_steer);
  s.read("cornering_stiffness", v.cornering_stiffness);
  s.read("mass", v.mass);
  s.read("yaw_inertia", v.yaw_inertia);
  s.read("cg_to_front_axle", v.cg_to_front_axle);
  s.finish();
}

json vehicle_json(const vehicle::VehicleParams& v) {
  return {{"wheelbase", v.wheelbase},
          {"track_width", v.track_width},
          {"max_steer", v.max_steer},
          {"cornering_stiffness", v.cornering_stiffness},
          {"mass", v.mass},
          {"yaw_inertia", v.yaw_inertia},
          {"cg_to_front_axle", v.cg_to_front_axle}};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("config: " + what);
}

}  // namespace

PipelineConfig config_from_json(std::string_view text, PipelineConfig c) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  Section root(doc, "");
  root.read("course", c.course);
  root.read("seed", c.seed);
  root.read("out", c.out);
  root.read("dx_nominal", c.dataset.dx_nominal);
  root.read("tol", c.dataset.tol);
  root.read("alpha", c.dataset.alpha);
  if (root.has("vehicle")) read_vehicle(root.child("vehicle"), c.dataset.vehicle);
  if (root.has("observation")) {
    Section s = root.child("observation");
    s.read("curvature_samples", c.dataset.observation.curvature_samples);
    s.read("lookahead_spacing", c.dataset.observation.lookahead_spacing);
    s.read("route_match_threshold", c.dataset.observation.route_match_threshold);
    s.finish();
  }
  if (root.has("route_match")) {
    Section s = root.child("route_match");
    s.read("threshold", c.dataset.route_match.threshold);
    s.read("violation_budget", c.dataset.route_match.violation_budget);
    s.finish();
  }
  if (root.has("generation")) {
    Section s = root.child("generation");
    harness::GenerationConfig& g = c.generation;
    s.read("count", g.count);
    s.read("rate_hz", g.rate_hz);
    s.read("laps", g.laps);
    s.read("max_offset_fraction", g.max_offset_fraction);
    s.read("speed_min", g.speed_min);
    s.read("speed_max", g.speed_max);
    s.read("centerline_speed", g.centerline_speed);
    s.read("wander_amplitude_min", g.wander_amplitude_min);
    s.read("wander_amplitude_max", g.wander_amplitude_max);
    s.read("wander_wavelength_min", g.wander_wavelength_min);
    s.read("wander_wavelength_max", g.wander_wavelength_max);
    s.read("preview_distance", g.preview_distance);
    s.read("identical", g.identical);
    if (s.has("noise")) {
      Section n = s.child("noise");
      n.read("translation_sigma", g.noise.translation_sigma);
      n.read("heading_sigma", g.noise.heading_sigma);
      n.read("drift_rate", g.noise.drift_rate);
      n.finish();
    }
    s.finish();
  }
  if (root.has("train")) {
    Section s = root.child("train");
    s.read("learning_rate", c.train.learning_rate);
    s.read("beta1", c.train.beta1);
    s.read("beta2", c.train.beta2);
    s.read("epsilon", c.train.epsilon);
    s.read("batch_size", c.train.batch_size);
    s.read("epochs", c.train.epochs);
    s.read("steps", c.train_steps);
    s.read("fem_hidden", c.train.shape.fem_hidden);
    s.read("sap_hidden", c.train.shape.sap_hidden);
    s.finish();
  }
  if (root.has("corruption")) {
    Section s = root.child("corruption");
    s.read("kind", c.corruption.kind);
    s.read("strength", c.corruption.strength);
    s.finish();
  }
  if (root.has("episode")) {
    Section s = root.child("episode");
    harness::EpisodeConfig& e = c.episode;
    s.read("dt", e.dt);
    s.read("duration", e.duration);
    s.read("target_speed", e.target_speed);
    s.read("speed_time_constant", e.speed_time_constant);
    s.read("perturbation_pct", e.perturbation_pct);
    s.read("crash_factor", e.crash_factor);
    std::string dynamics = harness::dynamics_name(e.dynamics);
    s.read("dynamics", dynamics);
    try {
      e.dynamics = harness::dynamics_from_name(dynamics);
    } catch (const InvalidArgument& err) {
      throw ValidationError(std::string("config: episode.dynamics: ") + err.what());
    }
    s.read("starts", c.starts);
    s.read("start_lateral", c.start_lateral);
    s.read("heading_jitter_deg", c.heading_jitter_deg);
    s.read("repeats", c.repeats);
    s.read("policy", c.policy);
    s.read("corrupt_observations", c.corrupt_observations);
    s.read("svg", c.svg);
    s.finish();
  }
  if (root.has("inputs")) {
    Section s = root.child("inputs");
    s.read("poses", c.poses);
    s.read("poses_dir", c.poses_dir);
    s.read("model", c.model);
    s.finish();
  }
  if (root.has("sweep")) {
    Section s = root.child("sweep");
    s.read("counts", c.sweep.counts);
    s.read("levels", c.sweep.levels);
    s.read("perturbation_models", c.sweep.perturbation_models);
    s.read("speeds", c.sweep.speeds);
    s.read("speed_models", c.sweep.speed_models);
    s.read("train_course", c.sweep.train_course);
    s.read("test_course", c.sweep.test_course);
    s.finish();
  }
  root.finish();
  return c;
}

std::string config_to_json(const PipelineConfig& c) {
  const harness::GenerationConfig& g = c.generation;
  const harness::EpisodeConfig& e = c.episode;
  json doc = {
      {"course", c.course},
      {"seed", c.seed},
      {"out", c.out},
      {"dx_nominal", c.dataset.dx_nominal},
      {"tol", c.dataset.tol},
      {"alpha", c.dataset.alpha},
      {"vehicle", vehicle_json(c.dataset.vehicle)},
      {"observation",
       {{"curvature_samples", c.dataset.observation.curvature_samples},
        {"lookahead_spacing", c.dataset.observation.lookahead_spacing},
        {"route_match_threshold", c.dataset.observation.route_match_threshold}}},
      {"route_match",
       {{"threshold", c.dataset.route_match.threshold},
        {"violation_budget", c.dataset.route_match.violation_budget}}},
      {"generation",
       {{"count", g.count},
        {"rate_hz", g.rate_hz},
        {"laps", g.laps},
        {"max_offset_fraction", g.max_offset_fraction},
        {"speed_min", g.speed_min},
        {"speed_max", g.speed_max},
        {"centerline_speed", g.centerline_speed},
        {"wander_amplitude_min", g.wander_amplitude_min},
        {"wander_amplitude_max", g.wander_amplitude_max},
        {"wander_wavelength_min", g.wander_wavelength_min},
        {"wander_wavelength_max", g.wander_wavelength_max},
        {"preview_distance", g.preview_distance},
        {"identical", g.identical},
        {"noise",
         {{"translation_sigma", g.noise.translation_sigma},
          {"heading_sigma", g.noise.heading_sigma},
          {"drift_rate", g.noise.drift_rate}}}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"steps", c.train_steps},
        {"fem_hidden", c.train.shape.fem_hidden},
        {"sap_hidden", c.train.shape.sap_hidden}}},
      {"corruption", {{"kind", c.corruption.kind}, {"strength", c.corruption.strength}}},
      {"episode",
       {{"dt", e.dt},
        {"duration", e.duration},
        {"target_speed", e.target_speed},
        {"speed_time_constant", e.speed_time_constant},
        {"perturbation_pct", e.perturbation_pct},
        {"crash_factor", e.crash_factor},
        {"dynamics", harness::dynamics_name(e.dynamics)},
        {"starts", c.starts},
        {"start_lateral", c.start_lateral},
        {"heading_jitter_deg", c.heading_jitter_deg},
        {"repeats", c.repeats},
        {"policy", c.policy},
        {"corrupt_observations", c.corrupt_observations},
        {"svg", c.svg}}},
      {"inputs", {{"poses", c.poses}, {"poses_dir", c.poses_dir}, {"model", c.model}}},
      {"sweep",
       {{"counts", c.sweep.counts},
        {"levels", c.sweep.levels},
        {"perturbation_models", c.sweep.perturbation_models},
        {"speeds", c.sweep.speeds},
        {"speed_models", c.sweep.speed_models},
        {"train_course", c.sweep.train_course},
        {"test_course", c.sweep.test_course}}},
  };
  return doc.dump(2) + "\n";
}

void PipelineConfig::finalize() {
  require(dataset.dx_nominal > 0.0, "dx_nominal must be > 0");
  require(dataset.tol >= 0.0 && dataset.tol < 1.0, "tol must be in [0, 1)");
  require(dataset.alpha >= 0.0, "alpha must be >= 0 (0 selects L/dx^2)");
  require(train_steps >= 0, "train.steps must be >= 0");
  require(starts >= 1, "episode.starts must be >= 1");
  require(repeats >= 1, "episode.repeats must be >= 1");
  require(start_lateral >= 0.0, "episode.start_lateral must be >= 0");
  require(heading_jitter_deg >= 0.0, "episode.heading_jitter_deg must be >= 0");
  require(policy == "model" || policy == "oracle", "episode.policy must be 'model' or 'oracle'");
  const std::vector<std::string> kinds{"identity", "gaussian", "affine", "dropout"};
  require(std::find(kinds.begin(), kinds.end(), corruption.kind) != kinds.end(),
          "corruption.kind must be one of identity, gaussian, affine, dropout");
  require(corruption.strength >= 0.0, "corruption.strength must be >= 0");
  require(corruption.kind != "dropout" || corruption.strength < 1.0, "dropout strength must be < 1");
  for (int n : sweep.counts) require(n >= 1, "sweep.counts must be >= 1");
  for (int n : sweep.perturbation_models) require(n >= 1, "sweep.perturbation_models must be >= 1");
  for (int n : sweep.speed_models) require(n >= 1, "sweep.speed_models must be >= 1");
  for (double l : sweep.levels) require(l >= 0.0 && l <= 0.5, "sweep.levels must lie in [0, 0.5]");
  for (double v : sweep.speeds) require(v > 0.0, "sweep.speeds must be > 0");

  generation.vehicle = dataset.vehicle;
  episode.vehicle = dataset.vehicle;
  episode.dx_nominal = dataset.dx_nominal;
  episode.alpha = dataset.alpha;
  dataset.route_match.threshold = dataset.observation.route_match_threshold;
  generation.seed = rng::mix(seed, kGenerationSeed);
  generation.noise.seed = rng::mix(seed, kNoiseSeed);
  train.seed = rng::mix(seed, kTrainSeed);
  episode.seed = rng::mix(seed, kEpisodeSeed);
  train.shape.input_dim = dataset.observation.feature_dim();

  try {
    dataset.vehicle.validate();
    generation.validate();
    train.validate();
    episode.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  require(dataset.observation.curvature_samples >= 0, "observation.curvature_samples must be >= 0");
  require(dataset.observation.lookahead_spacing > 0.0, "observation.lookahead_spacing must be > 0");
  require(dataset.observation.route_match_threshold > 0.0, "observation.route_match_threshold must be > 0");
  require(dataset.route_match.violation_budget >= 0.0 && dataset.route_match.violation_budget <= 1.0,
          "route_match.violation_budget must be in [0, 1]");
}

harness::PipelineConfig PipelineConfig::pipeline() const {
  harness::PipelineConfig p;
  p.generation = generation;
  p.dataset = dataset;
  p.train = train;
  p.train_steps = train_steps;
  return p;
}

harness::SweepConfig PipelineConfig::sweep_config() const {
  harness::SweepConfig s;
  s.pipeline = pipeline();
  s.episode = episode;
  s.starts = starts;
  s.start_lateral = start_lateral;
  s.heading_jitter = heading_jitter_deg * std::numbers::pi / 180.0;
  s.repeats = repeats;
  return s;
}

predictor::Corruption PipelineConfig::make_corruption(int feature_dim) const {
  const std::uint64_t cseed = rng::mix(seed, kCorruptionSeed);
  if (corruption.kind == "gaussian") return predictor::Corruption::gaussian_noise(corruption.strength, cseed);
  if (corruption.kind == "affine") return predictor::Corruption::affine(feature_dim, corruption.strength, cseed);
  if (corruption.kind == "dropout") return predictor::Corruption::dropout(corruption.strength, cseed);
  return predictor::Corruption::identity();
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"single-trajectory", "multi-trajectory", "oracle", "noisy-vo"};
  return names;
}

void apply_preset(PipelineConfig& config, std::string_view name) {
  if (name == "single-trajectory") {
    config.generation.count = 1;
    config.policy = "model";
  } else if (name == "multi-trajectory") {
    config.generation.count = 8;
    config.policy = "model";
  } else if (name == "oracle") {
    config.policy = "oracle";
  } else if (name == "noisy-vo") {
    config.generation.count = 8;
    config.generation.noise.translation_sigma = 0.002;
    config.generation.noise.heading_sigma = 0.0005;
    config.generation.noise.drift_rate = 0.001;
  } else {
    std::string valid;
    for (const std::string& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ValidationError("unknown preset '" + std::string(name) + "' (valid: " + valid + ")");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace vosteer::cli
