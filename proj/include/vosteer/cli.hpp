#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vosteer/errors.hpp"
#include "vosteer/harness.hpp"
#include "vosteer/predictor.hpp"
#include "vosteer/trajectory.hpp"

namespace vosteer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Raised for malformed configs, bad flags and missing inputs; maps to exit 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

struct CorruptionSpec {
  std::string kind = "affine";  // identity | gaussian | affine | dropout
  double strength = 0.1;        // affine entry scale, noise sigma or dropout probability
};

struct SweepSpec {
  std::vector<int> counts{1, 2, 4, 6, 8, 10};
  std::vector<double> levels{0.0, 0.1, 0.2, 0.3};
  std::vector<int> perturbation_models{1, 8};
  std::vector<double> speeds{5.0, 7.5, 9.0, 12.0};
  std::vector<int> speed_models{2, 8};
  std::string train_course = "builtin:gentle";
  std::string test_course = "builtin:sharp";
};

/// Everything a command needs. Sub-seeds for generation, noise, training and
/// evaluation are derived from `seed`.
struct PipelineConfig {
  std::string course = "builtin:benchmark";
  std::uint64_t seed = 0;
  std::string out = "out";

  trajectory::DatasetConfig dataset;
  harness::GenerationConfig generation;
  predictor::TrainConfig train;
  int train_steps = 20000;
  CorruptionSpec corruption;

  harness::EpisodeConfig episode;
  int starts = 20;
  double start_lateral = 0.4;
  double heading_jitter_deg = 2.0;
  int repeats = 10;
  std::string policy = "model";  // model | oracle
  bool corrupt_observations = false;
  bool svg = false;

  std::vector<std::string> poses;
  std::string poses_dir;
  std::string model;
  SweepSpec sweep;

  /// Copies shared settings (vehicle, seeds, dx) into the nested configs and
  /// validates them. Throws ValidationError.
  void finalize();

  harness::PipelineConfig pipeline() const;
  harness::SweepConfig sweep_config() const;
  predictor::Corruption make_corruption(int feature_dim) const;
};

/// Parses the JSON config. Unknown keys are rejected. Throws ValidationError.
PipelineConfig config_from_json(std::string_view text, PipelineConfig base = {});
std::string config_to_json(const PipelineConfig& config);

/// Names accepted by apply_preset.
const std::vector<std::string>& preset_names();
void apply_preset(PipelineConfig& config, std::string_view name);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a, used for manifest checksums.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace vosteer::cli
