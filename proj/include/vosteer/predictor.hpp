#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vosteer/course.hpp"
#include "vosteer/observation.hpp"
#include "vosteer/trajectory.hpp"
#include "vosteer/vehicle.hpp"

namespace vosteer::predictor {

using observation::ObservationVector;

inline constexpr int kCommandDim = 3;
inline constexpr int kModelFormatVersion = 1;

struct ModelShape {
  int input_dim = 16;
  int fem_hidden = 32;
  int sap_hidden = 16;

  std::size_t parameter_count() const;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Two-stage regressor. The feature extraction module (FEM) standardizes the
/// observation features and applies one affine layer plus rectifier; the
/// steering prediction module (SAP) takes those features concatenated with the
/// one-hot command through affine, rectifier, affine to a scalar dy.
///
/// All trainable parameters live in one flat row-major vector so optimizers
/// and gradient checks can treat them uniformly:
///   [fem_w (H x D) | fem_b (H) | sap1_w (S x (H+3)) | sap1_b (S) | sap2_w (S) | sap2_b (1)]
/// The standardization statistics are fitted, not trained.
class RegressorModel {
 public:
  RegressorModel() = default;
  /// Zero parameters, identity standardization.
  explicit RegressorModel(const ModelShape& shape);

  const ModelShape& shape() const { return shape_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::span<double> fem_parameters();
  std::span<const double> fem_parameters() const;
  std::span<const double> sap_parameters() const;

  std::vector<double>& feature_mean() { return mean_; }
  const std::vector<double>& feature_mean() const { return mean_; }
  std::vector<double>& feature_scale() { return scale_; }
  const std::vector<double>& feature_scale() const { return scale_; }

  std::size_t fem_w_offset() const { return 0; }
  std::size_t fem_b_offset() const;
  std::size_t sap1_w_offset() const;
  std::size_t sap1_b_offset() const;
  std::size_t sap2_w_offset() const;
  std::size_t sap2_b_offset() const;
  std::size_t fem_parameter_count() const { return sap1_w_offset(); }

  friend bool operator==(const RegressorModel&, const RegressorModel&) = default;

 private:
  ModelShape shape_;
  std::vector<double> params_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
void initialize(RegressorModel& model, std::uint64_t seed);

/// Per-feature mean and standard deviation over the samples, with the scale
/// floored at min_scale.
void fit_standardization(RegressorModel& model, const std::vector<trajectory::LabeledSample>& samples,
                         double min_scale = 1e-3);

/// FEM output (post-rectifier features) for one observation.
std::vector<double> extract_features(const RegressorModel& model, std::span<const double> features);

/// Throws ShapeMismatch when the observation dimension differs from the model.
double predict_dy(const RegressorModel& model, const ObservationVector& obs);

/// Mean L1 loss over the samples and its gradient with respect to every
/// trainable parameter. The subgradient of |r| at r = 0 is 0.
double l1_loss_and_gradient(const RegressorModel& model, std::span<const trajectory::LabeledSample* const> batch,
                            std::span<double> grad);

/// Deterministic observation corruption, the stand-in for a weather domain
/// shift. The same (seed, key) pair always yields the same output.
class Corruption {
 public:
  enum class Kind { kIdentity, kGaussianNoise, kAffine, kDropout };

  static Corruption identity();
  static Corruption gaussian_noise(double sigma, std::uint64_t seed);
  /// x -> A x + c with A = I + N(0, strength^2) entries and c ~ N(0, strength^2).
  static Corruption affine(int dim, double strength, std::uint64_t seed);
  static Corruption affine(std::vector<double> matrix, std::vector<double> offset);
  static Corruption dropout(double probability, std::uint64_t seed);

  Kind kind() const { return kind_; }
  std::vector<double> apply(std::span<const double> features, std::uint64_t key) const;
  ObservationVector apply(const ObservationVector& obs, std::uint64_t key) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::kIdentity;
  double param_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> matrix_;
  std::vector<double> offset_;
};

/// Mean squared feature mismatch between student FEM on corrupted inputs and
/// teacher FEM on clean inputs, with its gradient over the student's FEM
/// parameters (length fem_parameter_count()).
double distill_loss_and_gradient(const RegressorModel& student, const RegressorModel& teacher,
                                 std::span<const std::vector<double>* const> clean,
                                 std::span<const std::vector<double>* const> corrupted, std::span<double> grad);

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 64;
  int epochs = 60;
  std::uint64_t seed = 0;
  ModelShape shape;

  void validate() const;
};

struct TrainResult {
  RegressorModel model;
  std::vector<double> epoch_loss;  // mean training loss per epoch
};

/// Adam on the L1 objective with a seeded shuffle per epoch.
TrainResult train(const std::vector<trajectory::LabeledSample>& dataset, const TrainConfig& config);

/// Student = teacher with the FEM retrained so that FEM(corrupt(x)) matches
/// the teacher's FEM(x). SAP parameters and standardization are copied and
/// never updated; the teacher is not modified.
TrainResult distill(const RegressorModel& teacher, const Corruption& corruption,
                    const std::vector<trajectory::LabeledSample>& dataset, const TrainConfig& config);

/// Geometric dy towards the centerline point dx_nominal ahead of the car,
/// expressed in the car's heading frame. Throws OffCourse.
double oracle_dy(const vehicle::VehicleState& state, const course::Course& course, double dx_nominal,
                 double route_match_threshold = 5.0);

using DyPredictor = std::function<double(const vehicle::VehicleState&)>;
DyPredictor oracle_predictor(const course::Course& course, double dx_nominal);

/// Versioned JSON: shape, standardization, and row-major parameter arrays.
std::string model_to_json(const RegressorModel& model);
RegressorModel model_from_json(const std::string& text);
void save_model(const RegressorModel& model, const std::string& path);
RegressorModel load_model(const std::string& path);

/// "epoch,loss" CSV.
std::string loss_curve_csv(const std::vector<double>& epoch_loss);

}  // namespace vosteer::predictor
