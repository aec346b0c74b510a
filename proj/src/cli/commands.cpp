#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vosteer/cli.hpp"
#include "vosteer/course.hpp"
#include "vosteer/harness.hpp"
#include "vosteer/predictor.hpp"
#include "vosteer/rng.hpp"
#include "vosteer/trajectory.hpp"

namespace vosteer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands{"generate", "label", "train", "distill", "eval", "sweep"};
const std::vector<std::string> kSweeps{"trajectories", "perturbation", "speed", "heldout"};

// Effective config minus the output directory, so a manifest does not change
// with where it is written.
json portable_config(const PipelineConfig& config) {
  json j = json::parse(config_to_json(config));
  j.erase("out");
  return j;
}

struct Flags {
  std::string config;
  std::string out;
  std::string preset;
  std::string course;
  std::string model;
  std::vector<std::string> poses;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string sweep;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Collects written files and inputs for the manifest.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    files_.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
  }

  void input(const std::string& path) {
    inputs_.push_back({{"path", path}, {"fnv1a64", hex64(fnv1a64(read_file(path)))}});
  }

  void manifest(const std::string& command, const PipelineConfig& config, json results) {
    json doc = {
        {"tool", "vosteer"},
        {"manifest_version", 1},
        {"command", command},
        {"seed", config.seed},
        {"derived_seeds",
         {{"generation", config.generation.seed},
          {"noise", config.generation.noise.seed},
          {"train", config.train.seed},
          {"episode", config.episode.seed}}},
        {"config", portable_config(config)},
        {"inputs", inputs_},
        {"outputs", files_},
        {"results", std::move(results)},
    };
    const fs::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  json files_ = json::array();
  json inputs_ = json::array();
};

// One pose file plus the ground-truth sibling the camera observations come from.
struct PoseInput {
  std::string path;
  std::string truth_path;  // empty when there is no .gt.tum sibling
  int id = 0;
};

std::vector<PoseInput> resolve_pose_inputs(const PipelineConfig& config) {
  std::vector<std::string> paths = config.poses;
  if (paths.empty() && !config.poses_dir.empty()) {
    if (!fs::is_directory(config.poses_dir)) {
      throw ValidationError("pose directory '" + config.poses_dir + "' does not exist");
    }
    for (const auto& entry : fs::directory_iterator(config.poses_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && name.ends_with(".tum") && !name.ends_with(".gt.tum")) {
        paths.push_back(entry.path().string());
      }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw ValidationError("pose directory '" + config.poses_dir + "' holds no .tum files");
  }
  static const std::regex id_pattern(R"(traj_(\d+)\.tum$)");
  std::vector<PoseInput> inputs;
  std::set<int> ids;
  bool numbered = true;
  for (const std::string& p : paths) {
    if (!fs::is_regular_file(p)) throw ValidationError("pose file '" + p + "' does not exist");
    PoseInput in;
    in.path = p;
    std::smatch m;
    const std::string name = fs::path(p).filename().string();
    if (std::regex_search(name, m, id_pattern)) {
      in.id = std::stoi(m[1].str());
      numbered = numbered && ids.insert(in.id).second;
    } else {
      numbered = false;
    }
    const std::string gt = p.substr(0, p.size() - 4) + ".gt.tum";
    if (p.ends_with(".tum") && fs::is_regular_file(gt)) in.truth_path = gt;
    inputs.push_back(in);
  }
  if (!numbered) {
    for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].id = static_cast<int>(i);
  }
  return inputs;
}

struct LoadedRuns {
  std::vector<trajectory::Trajectory> odometry;
  std::vector<trajectory::Trajectory> truth;
};

LoadedRuns load_runs(const std::vector<PoseInput>& inputs, const PipelineConfig& config,
                     const course::Course& course, Outputs& outputs) {
  LoadedRuns runs;
  if (inputs.empty()) {
    for (harness::GeneratedRun& r : harness::generate_runs(course, config.generation)) {
      runs.odometry.push_back(std::move(r.odometry));
      runs.truth.push_back(std::move(r.truth));
    }
    return runs;
  }
  for (const PoseInput& in : inputs) {
    outputs.input(in.path);
    runs.odometry.push_back(trajectory::load_tum(in.path, in.id));
    if (!in.truth_path.empty()) {
      outputs.input(in.truth_path);
      runs.truth.push_back(trajectory::load_tum(in.truth_path, in.id));
    } else {
      runs.truth.push_back(runs.odometry.back());
    }
  }
  return runs;
}

std::vector<trajectory::LabeledSample> build_samples(const LoadedRuns& runs, const course::Course& course,
                                                     const PipelineConfig& config, int* reference_id) {
  if (reference_id != nullptr) *reference_id = trajectory::select_reference(runs.odometry, config.dataset.route_match);
  return trajectory::build_dataset(runs.odometry, course, config.dataset, &runs.truth);
}

predictor::TrainConfig effective_train(const PipelineConfig& config, std::size_t samples) {
  predictor::TrainConfig tc = config.train;
  if (config.train_steps > 0) tc.epochs = harness::epochs_for_steps(samples, tc.batch_size, config.train_steps);
  return tc;
}

json summary_json(const harness::Summary& s) {
  return {{"episodes", s.episodes},
          {"mean_in_track_ratio", s.mean_ratio},
          {"std_in_track_ratio", s.std_ratio},
          {"mean_abs_offset", s.mean_abs_offset},
          {"max_abs_offset", s.max_abs_offset},
          {"mean_speed", s.mean_speed},
          {"crashes", s.crashes}};
}

// --- commands -----------------------------------------------------------------

void cmd_generate(const PipelineConfig& config, Outputs& outputs, std::ostream& out) {
  const course::Course course = course::resolve_course(config.course);
  const std::vector<harness::GeneratedRun> runs = harness::generate_runs(course, config.generation);
  json profiles = json::array();
  for (int i = 0; i < static_cast<int>(runs.size()); ++i) {
    const std::string stem = "traj_" + std::to_string(i);
    outputs.write(stem + ".tum", trajectory::format_tum(runs[static_cast<std::size_t>(i)].odometry));
    outputs.write(stem + ".gt.tum", trajectory::format_tum(runs[static_cast<std::size_t>(i)].truth));
    const harness::DriverProfile p = harness::driver_profile(config.generation, course.corridor_half_width(), i);
    profiles.push_back({{"id", i},
                        {"offset", p.offset},
                        {"wander_amplitude", p.amplitude},
                        {"wander_wavelength", p.wavelength},
                        {"speed", p.speed},
                        {"frames", runs[static_cast<std::size_t>(i)].truth.size()}});
  }
  outputs.write("course.json", course::course_to_json(course));
  outputs.manifest("generate", config, {{"course", course.id()}, {"trajectories", profiles}});
  out << "generated " << runs.size() << " trajectories on '" << course.id() << "' in " << config.out << "\n";
}

void cmd_label(const PipelineConfig& config, const std::vector<PoseInput>& inputs, Outputs& outputs,
               std::ostream& out) {
  const course::Course course = course::resolve_course(config.course);
  const LoadedRuns runs = load_runs(inputs, config, course, outputs);
  int reference = 0;
  const auto samples = build_samples(runs, course, config, &reference);
  outputs.write("dataset.csv", trajectory::dataset_to_csv(samples));
  outputs.manifest("label", config,
                   {{"course", course.id()},
                    {"reference_id", reference},
                    {"trajectories", runs.odometry.size()},
                    {"samples", samples.size()},
                    {"alpha", config.dataset.effective_alpha()}});
  out << "labeled " << samples.size() << " samples (reference trajectory " << reference << ")\n";
}

void cmd_train(const PipelineConfig& config, const std::vector<PoseInput>& inputs, Outputs& outputs,
               std::ostream& out) {
  const course::Course course = course::resolve_course(config.course);
  const LoadedRuns runs = load_runs(inputs, config, course, outputs);
  int reference = 0;
  const auto samples = build_samples(runs, course, config, &reference);
  const predictor::TrainConfig tc = effective_train(config, samples.size());
  const predictor::TrainResult result = predictor::train(samples, tc);
  outputs.write("model.json", predictor::model_to_json(result.model));
  outputs.write("loss.csv", predictor::loss_curve_csv(result.epoch_loss));
  outputs.manifest("train", config,
                   {{"course", course.id()},
                    {"reference_id", reference},
                    {"trajectories", runs.odometry.size()},
                    {"samples", samples.size()},
                    {"epochs", tc.epochs},
                    {"final_loss", result.epoch_loss.back()}});
  out << "trained on " << samples.size() << " samples for " << tc.epochs << " epochs, final loss "
      << harness::format_g6(result.epoch_loss.back()) << "\n";
}

double mean_feature_mse(const predictor::RegressorModel& student, const predictor::RegressorModel& teacher,
                        const std::vector<trajectory::LabeledSample>& samples, const predictor::Corruption& c) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto clean = predictor::extract_features(teacher, samples[i].observation.features);
    const auto corrupted = predictor::extract_features(student, c.apply(samples[i].observation.features, i));
    for (std::size_t k = 0; k < clean.size(); ++k) total += (clean[k] - corrupted[k]) * (clean[k] - corrupted[k]);
    n += clean.size();
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

void cmd_distill(const PipelineConfig& config, const std::vector<PoseInput>& inputs, Outputs& outputs,
                 std::ostream& out) {
  const course::Course course = course::resolve_course(config.course);
  outputs.input(config.model);
  const predictor::RegressorModel teacher = predictor::load_model(config.model);
  const LoadedRuns runs = load_runs(inputs, config, course, outputs);
  const auto samples = build_samples(runs, course, config, nullptr);
  const predictor::Corruption corruption = config.make_corruption(teacher.shape().input_dim);
  const predictor::TrainConfig tc = effective_train(config, samples.size());
  const double before = mean_feature_mse(teacher, teacher, samples, corruption);
  const predictor::TrainResult result = predictor::distill(teacher, corruption, samples, tc);
  const double after = mean_feature_mse(result.model, teacher, samples, corruption);
  outputs.write("model.json", predictor::model_to_json(result.model));
  outputs.write("loss.csv", predictor::loss_curve_csv(result.epoch_loss));
  outputs.manifest("distill", config,
                   {{"corruption", corruption.describe()},
                    {"samples", samples.size()},
                    {"epochs", tc.epochs},
                    {"feature_mse_before", before},
                    {"feature_mse_after", after}});
  out << "distilled student under " << corruption.describe() << ": feature MSE " << harness::format_g6(before)
      << " -> " << harness::format_g6(after) << "\n";
}

void cmd_eval(const PipelineConfig& config, Outputs& outputs, std::ostream& out) {
  const course::Course course = course::resolve_course(config.course);
  harness::Policy policy;
  std::string policy_name = config.policy;
  json extra = json::object();
  if (config.policy == "oracle") {
    policy = harness::oracle_policy(course, config.dataset.dx_nominal);
  } else {
    std::shared_ptr<const predictor::RegressorModel> model;
    if (!config.model.empty()) {
      outputs.input(config.model);
      model = std::make_shared<const predictor::RegressorModel>(predictor::load_model(config.model));
    } else {
      const harness::TrainedModel trained = harness::train_on_course(course, config.pipeline());
      model = trained.model;
      extra["trained_inline"] = {{"trajectories", trained.trajectories}, {"samples", trained.samples}};
    }
    std::optional<predictor::Corruption> corruption;
    if (config.corrupt_observations) {
      corruption = config.make_corruption(model->shape().input_dim);
      extra["corruption"] = corruption->describe();
    }
    policy = harness::model_policy(model, course, config.dataset.observation, corruption);
  }
  const harness::SweepConfig sc = config.sweep_config();
  const std::vector<harness::StartPose> starts =
      harness::evaluation_starts(course, sc.starts, sc.start_lateral, sc.heading_jitter, sc.episode.seed);
  const std::vector<harness::EvalReport> reports = harness::evaluate_batch(course, policy, starts, sc.episode);

  std::vector<harness::EpisodeRow> rows;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    harness::EpisodeRow row;
    row.label = policy_name;
    row.trajectories = policy_name == "oracle" ? 0 : config.generation.count;
    row.level = sc.episode.perturbation_pct;
    row.start = static_cast<int>(k);
    row.dynamics = sc.episode.dynamics;
    row.report = reports[k];
    rows.push_back(std::move(row));
  }
  harness::SummaryRow summary;
  summary.label = policy_name;
  summary.trajectories = rows.empty() ? 0 : rows[0].trajectories;
  summary.level = sc.episode.perturbation_pct;
  summary.dynamics = sc.episode.dynamics;
  summary.summary = harness::summarize(reports);
  summary.repeat_mean = summary.summary.mean_ratio;
  outputs.write("episodes.csv", harness::episodes_csv(rows));
  outputs.write("summary.csv", harness::summary_csv({summary}));
  if (config.svg) {
    std::vector<std::vector<geometry::PlanarPose>> paths;
    const std::size_t shown = std::min<std::size_t>(starts.size(), 4);
    for (std::size_t k = 0; k < shown; ++k) {
      harness::EpisodeConfig ec = sc.episode;
      ec.seed = rng::mix(sc.episode.seed, k);
      paths.push_back(harness::run_episode(course, policy, starts[k], ec, true).path);
    }
    outputs.write("eval.svg", harness::render_svg(course, paths));
  }
  extra["course"] = course.id();
  extra["policy"] = policy_name;
  extra["summary"] = summary_json(summary.summary);
  outputs.manifest("eval", config, extra);
  out << policy_name << " on '" << course.id() << "': in-track ratio "
      << harness::format_g6(summary.summary.mean_ratio) << " over " << reports.size() << " episodes\n";
}

void cmd_sweep(const PipelineConfig& config, const std::string& which, Outputs& outputs, std::ostream& out) {
  const harness::SweepConfig sc = config.sweep_config();
  harness::SweepResult result;
  json extra = json::object();
  if (which == "heldout") {
    const course::Course train_course = course::resolve_course(config.sweep.train_course);
    const course::Course test_course = course::resolve_course(config.sweep.test_course);
    const harness::HeldoutResult h = harness::eval_heldout(train_course, test_course, sc);
    result = h.sweep;
    extra = {{"train_course", train_course.id()},
             {"test_course", test_course.id()},
             {"same_course", summary_json(h.same_course)},
             {"heldout", summary_json(h.heldout)},
             {"oracle", summary_json(h.oracle)}};
  } else {
    const course::Course course = course::resolve_course(config.course);
    extra["course"] = course.id();
    if (which == "trajectories") {
      result = harness::sweep_trajectories(course, config.sweep.counts, sc);
    } else if (which == "perturbation") {
      result = harness::sweep_perturbation(course, config.sweep.levels, config.sweep.perturbation_models, sc);
    } else {
      result = harness::sweep_speed(course, config.sweep.speeds, config.sweep.speed_models, sc);
    }
  }
  outputs.write("episodes.csv", harness::episodes_csv(result.episodes));
  outputs.write("summary.csv", harness::summary_csv(result.summary));
  extra["sweep"] = which;
  json rows = json::array();
  for (const harness::SummaryRow& r : result.summary) {
    rows.push_back({{"label", r.label}, {"mean_in_track_ratio", r.summary.mean_ratio}, {"error", r.error}});
  }
  extra["rows"] = rows;
  outputs.manifest("sweep", config, extra);
  out << "sweep " << which << ":\n";
  for (const harness::SummaryRow& r : result.summary) {
    out << "  " << r.label << "  ratio " << harness::format_g6(r.summary.mean_ratio);
    if (!r.error.empty()) out << "  FAILED: " << r.error;
    out << "\n";
  }
}

PipelineConfig build_config(const std::string& command, const Flags& flags) {
  PipelineConfig config;
  if (!flags.config.empty()) {
    if (!fs::is_regular_file(flags.config)) throw ValidationError("config file '" + flags.config + "' does not exist");
    try {
      config = config_from_json(read_file(flags.config));
    } catch (const ValidationError& e) {
      throw ValidationError(flags.config + ": " + e.what());
    }
  }
  if (!flags.preset.empty()) apply_preset(config, flags.preset);
  if (flags.seed_set) config.seed = flags.seed;
  if (!flags.out.empty()) config.out = flags.out;
  if (!flags.course.empty()) config.course = flags.course;
  if (!flags.model.empty()) config.model = flags.model;
  if (!flags.poses.empty()) {
    config.poses = flags.poses;
    config.poses_dir.clear();
  }
  config.finalize();

  // Every referenced path must exist before any work starts.
  auto check_course = [](const std::string& source) {
    if (!source.starts_with("builtin:") && !fs::is_regular_file(source)) {
      throw ValidationError("course file '" + source + "' does not exist");
    }
    try {
      (void)course::resolve_course(source);
    } catch (const Error& e) {
      throw ValidationError(e.what());
    }
  };
  if (command == "sweep" && flags.sweep == "heldout") {
    check_course(config.sweep.train_course);
    check_course(config.sweep.test_course);
  } else {
    check_course(config.course);
  }
  if (command == "distill" && config.model.empty()) throw ValidationError("distill needs a teacher model (--model)");
  if (!config.model.empty() && (command == "distill" || command == "eval") && !fs::is_regular_file(config.model)) {
    throw ValidationError("model file '" + config.model + "' does not exist");
  }
  return config;
}

fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_directory(dir, ec)) {
    throw ValidationError("output path '" + out + "' exists and is not a directory");
  }
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ValidationError("cannot create output directory '" + out + "': " + ec.message());
  }
  return dir;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-supervised steering from odometry poses: label, train, distill and evaluate.", "vosteer"};
  app.require_subcommand(1, 1);
  Flags flags;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> descriptions{
      {"generate", "Drive data-collection runs along a course and write TUM pose files"},
      {"label", "Build the labeled dataset CSV from pose files"},
      {"train", "Train the dy regressor"},
      {"distill", "Distill a student feature extractor under an observation corruption"},
      {"eval", "Closed-loop evaluation of a model or the geometric oracle"},
      {"sweep", "Run one of the experiment sweeps"}};
  for (const std::string& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--seed", flags.seed, "Global seed")->each([&](const std::string&) { flags.seed_set = true; });
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--preset", flags.preset, "Config preset")->check(CLI::IsMember(preset_names()));
    sub->add_option("--course", flags.course, "Course file or builtin:<name>");
    if (name == "eval" || name == "distill") sub->add_option("--model", flags.model, "Model JSON file");
    if (name == "label" || name == "train" || name == "distill") {
      sub->add_option("--poses", flags.poses, "TUM pose files (default: generate in memory)");
    }
    if (name == "sweep") {
      sub->add_option("which", flags.sweep, "trajectories | perturbation | speed | heldout")
          ->required()
          ->check(CLI::IsMember(kSweeps));
    }
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }

  PipelineConfig config;
  std::vector<PoseInput> inputs;
  fs::path dir;
  try {
    config = build_config(command, flags);
    if (command == "label" || command == "train" || command == "distill") inputs = resolve_pose_inputs(config);
    dir = prepare_out_dir(config.out);
  } catch (const Error& e) {
    err << "vosteer " << command << ": " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    Outputs outputs(dir);
    if (command == "generate") {
      cmd_generate(config, outputs, out);
    } else if (command == "label") {
      cmd_label(config, inputs, outputs, out);
    } else if (command == "train") {
      cmd_train(config, inputs, outputs, out);
    } else if (command == "distill") {
      cmd_distill(config, inputs, outputs, out);
    } else if (command == "eval") {
      cmd_eval(config, outputs, out);
    } else {
      cmd_sweep(config, flags.sweep, outputs, out);
    }
  } catch (const std::exception& e) {
    err << "vosteer " << command << ": " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace vosteer::cli
