#include "vosteer/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vosteer/errors.hpp"
#include "vosteer/rng.hpp"

namespace vosteer::predictor {

using trajectory::LabeledSample;

std::size_t ModelShape::parameter_count() const {
  const auto d = static_cast<std::size_t>(input_dim);
  const auto h = static_cast<std::size_t>(fem_hidden);
  const auto s = static_cast<std::size_t>(sap_hidden);
  return h * d + h + s * (h + kCommandDim) + s + s + 1;
}

RegressorModel::RegressorModel(const ModelShape& shape)
    : shape_(shape),
      params_(shape.parameter_count(), 0.0),
      mean_(static_cast<std::size_t>(shape.input_dim), 0.0),
      scale_(static_cast<std::size_t>(shape.input_dim), 1.0) {
  if (shape.input_dim <= 0 || shape.fem_hidden <= 0 || shape.sap_hidden <= 0) {
    throw InvalidArgument("ModelShape: all dimensions must be positive");
  }
}

std::size_t RegressorModel::fem_b_offset() const {
  return static_cast<std::size_t>(shape_.fem_hidden) * static_cast<std::size_t>(shape_.input_dim);
}
std::size_t RegressorModel::sap1_w_offset() const { return fem_b_offset() + static_cast<std::size_t>(shape_.fem_hidden); }
std::size_t RegressorModel::sap1_b_offset() const {
  return sap1_w_offset() +
         static_cast<std::size_t>(shape_.sap_hidden) * static_cast<std::size_t>(shape_.fem_hidden + kCommandDim);
}
std::size_t RegressorModel::sap2_w_offset() const { return sap1_b_offset() + static_cast<std::size_t>(shape_.sap_hidden); }
std::size_t RegressorModel::sap2_b_offset() const { return sap2_w_offset() + static_cast<std::size_t>(shape_.sap_hidden); }

std::span<double> RegressorModel::fem_parameters() { return std::span<double>(params_).first(fem_parameter_count()); }
std::span<const double> RegressorModel::fem_parameters() const {
  return std::span<const double>(params_).first(fem_parameter_count());
}
std::span<const double> RegressorModel::sap_parameters() const {
  return std::span<const double>(params_).subspan(fem_parameter_count());
}

void initialize(RegressorModel& model, std::uint64_t seed) {
  const ModelShape& s = model.shape();
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t begin, std::size_t end, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = begin; i < end; ++i) model.parameters()[i] = dist(rng);
  };
  fill(model.fem_w_offset(), model.sap1_w_offset(), s.input_dim);
  fill(model.sap1_w_offset(), model.sap2_w_offset(), s.fem_hidden + kCommandDim);
  fill(model.sap2_w_offset(), model.parameters().size(), s.sap_hidden);
}

void fit_standardization(RegressorModel& model, const std::vector<LabeledSample>& samples, double min_scale) {
  const auto d = static_cast<std::size_t>(model.shape().input_dim);
  std::vector<double> mean(d, 0.0);
  std::vector<double> var(d, 0.0);
  if (!samples.empty()) {
    for (const LabeledSample& s : samples) {
      for (std::size_t i = 0; i < d; ++i) mean[i] += s.observation.features[i];
    }
    for (double& m : mean) m /= static_cast<double>(samples.size());
    for (const LabeledSample& s : samples) {
      for (std::size_t i = 0; i < d; ++i) {
        const double e = s.observation.features[i] - mean[i];
        var[i] += e * e;
      }
    }
    for (double& v : var) v /= static_cast<double>(samples.size());
  }
  model.feature_mean() = mean;
  model.feature_scale().assign(d, 1.0);
  for (std::size_t i = 0; i < d; ++i) model.feature_scale()[i] = std::max(std::sqrt(var[i]), min_scale);
}

namespace {

void check_dim(const RegressorModel& model, std::size_t got) {
  if (got != static_cast<std::size_t>(model.shape().input_dim)) {
    throw ShapeMismatch("observation has " + std::to_string(got) + " features, model expects " +
                        std::to_string(model.shape().input_dim));
  }
}

// Activations kept for backpropagation.
struct ForwardCache {
  std::vector<double> z;   // standardized input
  std::vector<double> a1;  // FEM pre-activation
  std::vector<double> u;   // [FEM features, command]
  std::vector<double> a2;  // SAP hidden pre-activation
  std::vector<double> g;   // SAP hidden activation
  double y = 0.0;
};

void fem_forward(const RegressorModel& m, std::span<const double> x, ForwardCache& c) {
  const auto d = static_cast<std::size_t>(m.shape().input_dim);
  const auto h = static_cast<std::size_t>(m.shape().fem_hidden);
  const std::span<const double> p = m.parameters();
  c.z.resize(d);
  for (std::size_t i = 0; i < d; ++i) c.z[i] = (x[i] - m.feature_mean()[i]) / m.feature_scale()[i];
  c.a1.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    double acc = p[m.fem_b_offset() + k];
    const double* w = &p[m.fem_w_offset() + k * d];
    for (std::size_t i = 0; i < d; ++i) acc += w[i] * c.z[i];
    c.a1[k] = acc;
  }
}

double full_forward(const RegressorModel& m, std::span<const double> x, const observation::OneHot& cmd,
                    ForwardCache& c) {
  fem_forward(m, x, c);
  const auto h = static_cast<std::size_t>(m.shape().fem_hidden);
  const auto s = static_cast<std::size_t>(m.shape().sap_hidden);
  const std::size_t width = h + kCommandDim;
  const std::span<const double> p = m.parameters();
  c.u.resize(width);
  for (std::size_t k = 0; k < h; ++k) c.u[k] = std::max(0.0, c.a1[k]);
  for (std::size_t k = 0; k < kCommandDim; ++k) c.u[h + k] = cmd[k];
  c.a2.resize(s);
  c.g.resize(s);
  double y = p[m.sap2_b_offset()];
  for (std::size_t j = 0; j < s; ++j) {
    double acc = p[m.sap1_b_offset() + j];
    const double* w = &p[m.sap1_w_offset() + j * width];
    for (std::size_t k = 0; k < width; ++k) acc += w[k] * c.u[k];
    c.a2[j] = acc;
    c.g[j] = std::max(0.0, acc);
    y += p[m.sap2_w_offset() + j] * c.g[j];
  }
  c.y = y;
  return y;
}

// Accumulates d(output)/d(params) * upstream into grad.
void full_backward(const RegressorModel& m, const ForwardCache& c, double upstream, std::span<double> grad) {
  const auto d = static_cast<std::size_t>(m.shape().input_dim);
  const auto h = static_cast<std::size_t>(m.shape().fem_hidden);
  const auto s = static_cast<std::size_t>(m.shape().sap_hidden);
  const std::size_t width = h + kCommandDim;
  const std::span<const double> p = m.parameters();

  grad[m.sap2_b_offset()] += upstream;
  std::vector<double> du(h, 0.0);
  for (std::size_t j = 0; j < s; ++j) {
    grad[m.sap2_w_offset() + j] += upstream * c.g[j];
    if (c.a2[j] <= 0.0) continue;
    const double da2 = upstream * p[m.sap2_w_offset() + j];
    grad[m.sap1_b_offset() + j] += da2;
    const double* w = &p[m.sap1_w_offset() + j * width];
    double* gw = &grad[m.sap1_w_offset() + j * width];
    for (std::size_t k = 0; k < width; ++k) gw[k] += da2 * c.u[k];
    for (std::size_t k = 0; k < h; ++k) du[k] += da2 * w[k];
  }
  for (std::size_t k = 0; k < h; ++k) {
    if (c.a1[k] <= 0.0) continue;
    grad[m.fem_b_offset() + k] += du[k];
    double* gw = &grad[m.fem_w_offset() + k * d];
    for (std::size_t i = 0; i < d; ++i) gw[i] += du[k] * c.z[i];
  }
}

}  // namespace

std::vector<double> extract_features(const RegressorModel& model, std::span<const double> features) {
  check_dim(model, features.size());
  ForwardCache c;
  fem_forward(model, features, c);
  for (double& a : c.a1) a = std::max(0.0, a);
  return c.a1;
}

double predict_dy(const RegressorModel& model, const ObservationVector& obs) {
  check_dim(model, obs.features.size());
  ForwardCache c;
  return full_forward(model, obs.features, obs.command, c);
}

double l1_loss_and_gradient(const RegressorModel& model, std::span<const LabeledSample* const> batch,
                            std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  if (batch.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  ForwardCache c;
  for (const LabeledSample* s : batch) {
    check_dim(model, s->observation.features.size());
    const double residual = full_forward(model, s->observation.features, s->observation.command, c) - s->motion.dy;
    loss += std::abs(residual);
    const double sign = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
    if (sign != 0.0) full_backward(model, c, sign * inv, grad);
  }
  return loss * inv;
}

// --- corruption ------------------------------------------------------------

Corruption Corruption::identity() { return {}; }

Corruption Corruption::gaussian_noise(double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_noise: sigma must be >= 0");
  Corruption c;
  c.kind_ = Kind::kGaussianNoise;
  c.param_ = sigma;
  c.seed_ = seed;
  return c;
}

Corruption Corruption::affine(int dim, double strength, std::uint64_t seed) {
  if (dim <= 0) throw InvalidArgument("affine corruption: dim must be positive");
  const auto n = static_cast<std::size_t>(dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, strength);
  std::vector<double> a(n * n, 0.0);
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = (i == j ? 1.0 : 0.0) + dist(rng);
  }
  for (double& v : c) v = dist(rng);
  return affine(std::move(a), std::move(c));
}

Corruption Corruption::affine(std::vector<double> matrix, std::vector<double> offset) {
  if (matrix.size() != offset.size() * offset.size()) {
    throw ShapeMismatch("affine corruption: matrix must be dim x dim for an offset of length dim");
  }
  Corruption c;
  c.kind_ = Kind::kAffine;
  c.matrix_ = std::move(matrix);
  c.offset_ = std::move(offset);
  return c;
}

Corruption Corruption::dropout(double probability, std::uint64_t seed) {
  if (!(probability >= 0.0 && probability < 1.0)) throw InvalidArgument("dropout: probability must be in [0, 1)");
  Corruption c;
  c.kind_ = Kind::kDropout;
  c.param_ = probability;
  c.seed_ = seed;
  return c;
}

std::vector<double> Corruption::apply(std::span<const double> features, std::uint64_t key) const {
  std::vector<double> out(features.begin(), features.end());
  switch (kind_) {
    case Kind::kIdentity:
      break;
    case Kind::kGaussianNoise: {
      std::mt19937_64 rng(rng::mix(seed_, key));
      std::normal_distribution<double> dist(0.0, param_);
      for (double& v : out) v += dist(rng);
      break;
    }
    case Kind::kAffine: {
      const std::size_t n = offset_.size();
      if (features.size() != n) {
        throw ShapeMismatch("affine corruption expects " + std::to_string(n) + " features, got " +
                            std::to_string(features.size()));
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = offset_[i];
        for (std::size_t j = 0; j < n; ++j) acc += matrix_[i * n + j] * features[j];
        out[i] = acc;
      }
      break;
    }
    case Kind::kDropout: {
      std::mt19937_64 rng(rng::mix(seed_, key));
      std::uniform_real_distribution<double> dist(0.0, 1.0);
      for (double& v : out) {
        if (dist(rng) < param_) v = 0.0;
      }
      break;
    }
  }
  return out;
}

ObservationVector Corruption::apply(const ObservationVector& obs, std::uint64_t key) const {
  return {apply(obs.features, key), obs.command};
}

std::string Corruption::describe() const {
  char buf[96];
  switch (kind_) {
    case Kind::kIdentity:
      return "identity";
    case Kind::kGaussianNoise:
      std::snprintf(buf, sizeof buf, "gaussian_noise(sigma=%g)", param_);
      return buf;
    case Kind::kAffine:
      return "affine(dim=" + std::to_string(offset_.size()) + ")";
    case Kind::kDropout:
      std::snprintf(buf, sizeof buf, "dropout(p=%g)", param_);
      return buf;
  }
  return "unknown";
}

double distill_loss_and_gradient(const RegressorModel& student, const RegressorModel& teacher,
                                 std::span<const std::vector<double>* const> clean,
                                 std::span<const std::vector<double>* const> corrupted, std::span<double> grad) {
  if (!(student.shape() == teacher.shape())) throw ShapeMismatch("distill: student and teacher shapes differ");
  if (clean.size() != corrupted.size()) throw InvalidArgument("distill: batch halves differ in size");
  std::fill(grad.begin(), grad.end(), 0.0);
  if (clean.empty()) return 0.0;
  const auto d = static_cast<std::size_t>(student.shape().input_dim);
  const auto h = static_cast<std::size_t>(student.shape().fem_hidden);
  const double inv = 1.0 / static_cast<double>(clean.size() * h);
  double loss = 0.0;
  ForwardCache ct;
  ForwardCache cs;
  for (std::size_t b = 0; b < clean.size(); ++b) {
    check_dim(teacher, clean[b]->size());
    check_dim(student, corrupted[b]->size());
    fem_forward(teacher, *clean[b], ct);
    fem_forward(student, *corrupted[b], cs);
    for (std::size_t k = 0; k < h; ++k) {
      const double diff = std::max(0.0, cs.a1[k]) - std::max(0.0, ct.a1[k]);
      loss += diff * diff;
      if (cs.a1[k] <= 0.0) continue;
      const double da = 2.0 * diff * inv;
      grad[student.fem_b_offset() + k] += da;
      double* gw = &grad[student.fem_w_offset() + k * d];
      for (std::size_t i = 0; i < d; ++i) gw[i] += da * cs.z[i];
    }
  }
  return loss * inv;
}

// --- training --------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("TrainConfig: learning_rate must be > 0");
  if (epochs < 1) throw InvalidArgument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("TrainConfig: batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("TrainConfig: betas must be in [0, 1)");
  }
}

namespace {

class Adam {
 public:
  Adam(std::size_t n, const TrainConfig& cfg) : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  const TrainConfig& cfg_;
  long long t_ = 0;
};

}  // namespace

TrainResult train(const std::vector<LabeledSample>& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw EmptyDataset("train: dataset is empty");
  TrainResult result{RegressorModel(config.shape), {}};
  RegressorModel& model = result.model;
  for (const LabeledSample& s : dataset) check_dim(model, s.observation.features.size());
  initialize(model, config.seed);
  fit_standardization(model, dataset);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(rng::mix(config.seed, 0x5eed5eedULL));
  std::vector<double> grad(model.parameters().size(), 0.0);
  std::vector<const LabeledSample*> batch;
  Adam adam(grad.size(), config);
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&dataset[order[i]]);
      const double loss = l1_loss_and_gradient(model, batch, grad);
      total += loss * static_cast<double>(batch.size());
      adam.step(model.parameters(), grad);
    }
    result.epoch_loss.push_back(total / static_cast<double>(dataset.size()));
  }
  return result;
}

TrainResult distill(const RegressorModel& teacher, const Corruption& corruption,
                    const std::vector<LabeledSample>& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) throw EmptyDataset("distill: dataset is empty");
  for (const LabeledSample& s : dataset) check_dim(teacher, s.observation.features.size());

  // Corrupted views are fixed per sample so the objective is deterministic.
  std::vector<std::vector<double>> corrupted;
  corrupted.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    corrupted.push_back(corruption.apply(dataset[i].observation.features, i));
  }

  TrainResult result{teacher, {}};
  RegressorModel& student = result.model;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(rng::mix(config.seed, 0xd157111ULL));
  const std::size_t fem_count = student.fem_parameter_count();
  std::vector<double> grad(fem_count, 0.0);
  std::vector<const std::vector<double>*> clean_batch;
  std::vector<const std::vector<double>*> corrupt_batch;
  Adam adam(fem_count, config);
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      clean_batch.clear();
      corrupt_batch.clear();
      for (std::size_t i = start; i < end; ++i) {
        clean_batch.push_back(&dataset[order[i]].observation.features);
        corrupt_batch.push_back(&corrupted[order[i]]);
      }
      const double loss = distill_loss_and_gradient(student, teacher, clean_batch, corrupt_batch, grad);
      total += loss * static_cast<double>(clean_batch.size());
      adam.step(student.fem_parameters(), grad);
    }
    result.epoch_loss.push_back(total / static_cast<double>(dataset.size()));
  }
  return result;
}

// --- geometric oracle -------------------------------------------------------

double oracle_dy(const vehicle::VehicleState& state, const course::Course& course, double dx_nominal,
                 double route_match_threshold) {
  const course::Projection proj = course.project(state.pose.x(), state.pose.y());
  if (proj.distance > route_match_threshold) {
    throw OffCourse("oracle: car is " + std::to_string(proj.distance) + " m from course '" + course.id() + "'");
  }
  const geometry::PlanarPose target = course.pose_at(proj.s + dx_nominal);
  const geometry::PlanarVec forward{std::cos(state.pose.heading()), std::sin(state.pose.heading())};
  return geometry::local_motion(forward, geometry::displacement(state.pose, target)).dy;
}

DyPredictor oracle_predictor(const course::Course& course, double dx_nominal) {
  if (!(dx_nominal > 0.0)) throw InvalidArgument("oracle_predictor: dx_nominal must be > 0");
  return [course, dx_nominal](const vehicle::VehicleState& state) { return oracle_dy(state, course, dx_nominal); };
}

// --- serialization ----------------------------------------------------------

namespace {

std::vector<double> slice(std::span<const double> p, std::size_t begin, std::size_t end) {
  return {p.begin() + static_cast<std::ptrdiff_t>(begin), p.begin() + static_cast<std::ptrdiff_t>(end)};
}

}  // namespace

std::string model_to_json(const RegressorModel& model) {
  const std::span<const double> p = model.parameters();
  nlohmann::json doc = {
      {"format", "vosteer-regressor"},
      {"version", kModelFormatVersion},
      {"shape",
       {{"input_dim", model.shape().input_dim},
        {"fem_hidden", model.shape().fem_hidden},
        {"sap_hidden", model.shape().sap_hidden},
        {"command_dim", kCommandDim}}},
      {"feature_mean", model.feature_mean()},
      {"feature_scale", model.feature_scale()},
      {"fem_w", slice(p, model.fem_w_offset(), model.fem_b_offset())},
      {"fem_b", slice(p, model.fem_b_offset(), model.sap1_w_offset())},
      {"sap1_w", slice(p, model.sap1_w_offset(), model.sap1_b_offset())},
      {"sap1_b", slice(p, model.sap1_b_offset(), model.sap2_w_offset())},
      {"sap2_w", slice(p, model.sap2_w_offset(), model.sap2_b_offset())},
      {"sap2_b", slice(p, model.sap2_b_offset(), p.size())},
  };
  return doc.dump() + "\n";
}

RegressorModel model_from_json(const std::string& text) {
  try {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "vosteer-regressor") {
      throw InvalidArgument("model file: unexpected format tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw InvalidArgument("model file: unsupported version " + std::to_string(version));
    }
    const auto& sh = doc.at("shape");
    if (sh.value("command_dim", kCommandDim) != kCommandDim) throw ShapeMismatch("model file: command_dim must be 3");
    RegressorModel model(
        {sh.at("input_dim").get<int>(), sh.at("fem_hidden").get<int>(), sh.at("sap_hidden").get<int>()});
    auto load = [&](const char* key, std::size_t begin, std::size_t end) {
      const auto values = doc.at(key).get<std::vector<double>>();
      if (values.size() != end - begin) {
        throw ShapeMismatch(std::string("model file: '") + key + "' has " + std::to_string(values.size()) +
                            " entries, expected " + std::to_string(end - begin));
      }
      std::copy(values.begin(), values.end(), model.parameters().begin() + static_cast<std::ptrdiff_t>(begin));
    };
    load("fem_w", model.fem_w_offset(), model.fem_b_offset());
    load("fem_b", model.fem_b_offset(), model.sap1_w_offset());
    load("sap1_w", model.sap1_w_offset(), model.sap1_b_offset());
    load("sap1_b", model.sap1_b_offset(), model.sap2_w_offset());
    load("sap2_w", model.sap2_w_offset(), model.sap2_b_offset());
    load("sap2_b", model.sap2_b_offset(), model.parameters().size());
    model.feature_mean() = doc.at("feature_mean").get<std::vector<double>>();
    model.feature_scale() = doc.at("feature_scale").get<std::vector<double>>();
    const auto d = static_cast<std::size_t>(model.shape().input_dim);
    if (model.feature_mean().size() != d || model.feature_scale().size() != d) {
      throw ShapeMismatch("model file: standardization length differs from input_dim");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("model file: ") + e.what());
  }
}

void save_model(const RegressorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file '" + path + "'");
  out << model_to_json(model);
  if (!out) throw IoError("failed writing model file '" + path + "'");
}

RegressorModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_json(buf.str());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string loss_curve_csv(const std::vector<double>& epoch_loss) {
  std::string out = "epoch,loss\n";
  char line[64];
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.9g\n", i + 1, epoch_loss[i]);
    out += line;
  }
  return out;
}

}  // namespace vosteer::predictor
