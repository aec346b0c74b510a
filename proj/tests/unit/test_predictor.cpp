#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vosteer/course.hpp"
#include "vosteer/errors.hpp"
#include "vosteer/predictor.hpp"

namespace {

using namespace vosteer::predictor;
using vosteer::trajectory::LabeledSample;

LabeledSample sample(std::vector<double> features, double dy, int command = 1) {
  LabeledSample s;
  s.observation.features = std::move(features);
  s.observation.command = {0.0, 0.0, 0.0};
  s.observation.command[static_cast<std::size_t>(command)] = 1.0;
  s.motion = {0.5, dy};
  return s;
}

// dy = 0.3 x0 - 0.2 x1 + 0.1 over a box.
std::vector<LabeledSample> linear_set(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    out.push_back(sample({a, b}, 0.3 * a - 0.2 * b + 0.1));
  }
  return out;
}

RegressorModel random_model(const ModelShape& shape, std::uint64_t seed) {
  RegressorModel m(shape);
  initialize(m, seed);
  std::mt19937_64 rng(seed ^ 0xabcdef);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < shape.input_dim; ++i) {
    m.feature_mean()[i] = 0.3 * u(rng);
    m.feature_scale()[i] = 1.0 + 0.5 * u(rng);
  }
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double relative_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
  return gap / std::max({max_abs(a), max_abs(b), 1e-12});
}

TEST(Model, ShapeAndOffsets) {
  const ModelShape shape{4, 5, 3};
  const RegressorModel m(shape);
  EXPECT_EQ(shape.parameter_count(), 4u * 5 + 5 + 3 * 8 + 3 + 3 + 1);
  EXPECT_EQ(m.parameters().size(), shape.parameter_count());
  EXPECT_EQ(m.fem_b_offset(), 20u);
  EXPECT_EQ(m.sap1_w_offset(), 25u);
  EXPECT_EQ(m.fem_parameter_count(), 25u);
  EXPECT_EQ(m.sap2_b_offset(), shape.parameter_count() - 1);
  EXPECT_EQ(m.sap_parameters().size(), shape.parameter_count() - 25);
}

TEST(Predict, ZeroWeightsGiveZero) {
  const RegressorModel m(ModelShape{3, 4, 2});
  EXPECT_EQ(predict_dy(m, sample({1.0, -2.0, 5.0}, 0).observation), 0.0);
}

TEST(Predict, HandComputedToyModel) {
  RegressorModel m(ModelShape{2, 2, 1});
  auto p = m.parameters();
  p[0] = 1.0;  // fem_w row 0: (1, 0)
  p[3] = 1.0;  // fem_w row 1: (0, 1)
  // sap1_w row: features (1, 1), commands (0, 0.1, 0)
  p[m.sap1_w_offset() + 0] = 1.0;
  p[m.sap1_w_offset() + 1] = 1.0;
  p[m.sap1_w_offset() + 3] = 0.1;
  p[m.sap2_w_offset()] = 2.0;
  p[m.sap2_b_offset()] = 0.5;
  // relu(0.3) + relu(-0.2) + 0.1 = 0.4, then 2 * 0.4 + 0.5.
  EXPECT_NEAR(predict_dy(m, sample({0.3, -0.2}, 0).observation), 1.3, 1e-15);
  const auto f = extract_features(m, std::vector<double>{0.3, -0.2});
  ASSERT_EQ(f.size(), 2u);
  EXPECT_DOUBLE_EQ(f[0], 0.3);
  EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(Predict, ShapeMismatch) {
  const RegressorModel m(ModelShape{3, 4, 2});
  EXPECT_THROW(predict_dy(m, sample({1.0, 2.0}, 0).observation), vosteer::ShapeMismatch);
}

TEST(Standardization, FloorsConstantFeatures) {
  RegressorModel m(ModelShape{2, 2, 2});
  const std::vector<LabeledSample> data{sample({1.0, 5.0}, 0), sample({3.0, 5.0}, 0)};
  fit_standardization(m, data);
  EXPECT_DOUBLE_EQ(m.feature_mean()[0], 2.0);
  EXPECT_DOUBLE_EQ(m.feature_scale()[0], 1.0);
  EXPECT_DOUBLE_EQ(m.feature_mean()[1], 5.0);
  EXPECT_DOUBLE_EQ(m.feature_scale()[1], 1e-3);
}

TEST(Gradient, L1MatchesFiniteDifferences) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelShape shape{3, 5, 4};
    const RegressorModel model = random_model(shape, 1000 + trial);
    std::vector<LabeledSample> data;
    for (int i = 0; i < 6; ++i) data.push_back(sample({u(rng), u(rng), u(rng)}, 3.0 * u(rng), i % 3));
    std::vector<const LabeledSample*> batch;
    for (const auto& s : data) batch.push_back(&s);

    std::vector<double> analytic(model.parameters().size());
    l1_loss_and_gradient(model, batch, analytic);
    const auto loss_at = [&](const std::vector<double>& p) {
      RegressorModel m = model;
      std::copy(p.begin(), p.end(), m.parameters().begin());
      std::vector<double> scratch(p.size());
      return l1_loss_and_gradient(m, batch, scratch);
    };
    const std::vector<double> p(model.parameters().begin(), model.parameters().end());
    EXPECT_LT(relative_gap(analytic, oracle::numeric_gradient(loss_at, p, 1e-6)), 1e-5) << trial;
  }
}

TEST(Gradient, DistillMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelShape shape{4, 6, 3};
    const RegressorModel teacher = random_model(shape, 2000 + trial);
    const RegressorModel student = random_model(shape, 3000 + trial);
    std::vector<std::vector<double>> clean, dirty;
    for (int i = 0; i < 5; ++i) {
      clean.push_back({u(rng), u(rng), u(rng), u(rng)});
      dirty.push_back({u(rng), u(rng), u(rng), u(rng)});
    }
    std::vector<const std::vector<double>*> cp, dp;
    for (int i = 0; i < 5; ++i) {
      cp.push_back(&clean[i]);
      dp.push_back(&dirty[i]);
    }
    std::vector<double> analytic(student.fem_parameter_count());
    distill_loss_and_gradient(student, teacher, cp, dp, analytic);
    const auto loss_at = [&](const std::vector<double>& p) {
      RegressorModel m = student;
      std::copy(p.begin(), p.end(), m.fem_parameters().begin());
      std::vector<double> scratch(p.size());
      return distill_loss_and_gradient(m, teacher, cp, dp, scratch);
    };
    const std::vector<double> p(student.fem_parameters().begin(), student.fem_parameters().end());
    EXPECT_LT(relative_gap(analytic, oracle::numeric_gradient(loss_at, p, 1e-6)), 1e-5) << trial;
  }
}

TEST(Gradient, ZeroResidualHasZeroSubgradient) {
  RegressorModel m(ModelShape{2, 2, 2});
  const LabeledSample s = sample({0.5, 0.5}, 0.0);
  const LabeledSample* batch[] = {&s};
  std::vector<double> g(m.parameters().size(), 1.0);
  EXPECT_EQ(l1_loss_and_gradient(m, batch, g), 0.0);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Train, FitsLinearFunction) {
  const auto train_set = linear_set(2048, 1);
  const auto held_out = linear_set(256, 2);
  TrainConfig cfg;
  cfg.shape = {2, 32, 16};
  cfg.learning_rate = 1e-3;
  cfg.epochs = 600;
  cfg.seed = 5;
  const TrainResult r = train(train_set, cfg);

  // The least-squares fit recovers the generating plane; the network must agree with it.
  std::vector<double> rows, ys;
  for (const auto& s : train_set) {
    rows.insert(rows.end(), {s.observation.features[0], s.observation.features[1], 1.0});
    ys.push_back(s.motion.dy);
  }
  const auto w = oracle::least_squares(rows, static_cast<int>(train_set.size()), 3, ys);
  double mae = 0.0;
  for (const auto& s : held_out) {
    const double ls = w[0] * s.observation.features[0] + w[1] * s.observation.features[1] + w[2];
    mae += std::abs(predict_dy(r.model, s.observation) - ls);
  }
  mae /= static_cast<double>(held_out.size());
  EXPECT_LT(mae, 1e-3);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
}

TEST(Train, MemorizesSingleSample) {
  const std::vector<LabeledSample> data(64, sample({0.2, -0.4}, 0.37));
  TrainConfig cfg;
  cfg.shape = {2, 32, 16};
  cfg.epochs = 3000;
  const TrainResult r = train(data, cfg);
  EXPECT_NEAR(predict_dy(r.model, data[0].observation), 0.37, 1e-4);
}

TEST(Train, Deterministic) {
  const auto data = linear_set(300, 3);
  TrainConfig cfg;
  cfg.shape = {2, 8, 4};
  cfg.epochs = 5;
  cfg.seed = 77;
  const TrainResult a = train(data, cfg);
  const TrainResult b = train(data, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  cfg.seed = 78;
  EXPECT_FALSE(train(data, cfg).model == a.model);
}

TEST(Train, Errors) {
  TrainConfig cfg;
  cfg.shape = {2, 4, 4};
  EXPECT_THROW(train({}, cfg), vosteer::EmptyDataset);
  EXPECT_THROW(train({sample({1.0, 2.0, 3.0}, 0)}, cfg), vosteer::ShapeMismatch);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train({sample({1.0, 2.0}, 0)}, cfg), vosteer::InvalidArgument);
}

TEST(Corruption, DeterministicPerKey) {
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const Corruption g = Corruption::gaussian_noise(0.1, 9);
  EXPECT_EQ(g.apply(x, 3), g.apply(x, 3));
  EXPECT_NE(g.apply(x, 3), g.apply(x, 4));
  EXPECT_EQ(Corruption::identity().apply(x, 1), x);
  const Corruption a = Corruption::affine(4, 0.1, 5);
  EXPECT_EQ(a.apply(x, 1), a.apply(x, 2));
  EXPECT_EQ(a.apply(x, 1), Corruption::affine(4, 0.1, 5).apply(x, 1));
}

TEST(Corruption, ExplicitAffine) {
  const Corruption a = Corruption::affine({2.0, 0.0, 1.0, 1.0}, {0.5, -0.5});
  const auto y = a.apply(std::vector<double>{1.0, 2.0}, 0);
  EXPECT_DOUBLE_EQ(y[0], 2.5);
  EXPECT_DOUBLE_EQ(y[1], 2.5);
  EXPECT_THROW(a.apply(std::vector<double>{1.0}, 0), vosteer::ShapeMismatch);
}

TEST(Corruption, DropoutRate) {
  const Corruption d = Corruption::dropout(0.25, 1);
  const std::vector<double> x(4000, 1.0);
  const auto y = d.apply(x, 0);
  const auto zeros = std::count(y.begin(), y.end(), 0.0);
  EXPECT_NEAR(static_cast<double>(zeros) / 4000.0, 0.25, 0.03);
  EXPECT_THROW(Corruption::dropout(1.5, 1), vosteer::InvalidArgument);
}

// Feature-space mismatch of `model` on corrupted inputs versus the teacher on
// clean ones, evaluated with a full-batch loss call.
double feature_mse(const RegressorModel& model, const RegressorModel& teacher, const Corruption& c,
                   const std::vector<LabeledSample>& data) {
  std::vector<std::vector<double>> dirty;
  for (std::size_t i = 0; i < data.size(); ++i) dirty.push_back(c.apply(data[i].observation.features, i));
  std::vector<const std::vector<double>*> cp, dp;
  for (std::size_t i = 0; i < data.size(); ++i) {
    cp.push_back(&data[i].observation.features);
    dp.push_back(&dirty[i]);
  }
  std::vector<double> g(model.fem_parameter_count());
  return distill_loss_and_gradient(model, teacher, cp, dp, g);
}

std::vector<LabeledSample> feature_set(std::size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> u(0.0, 1.0);
  std::vector<LabeledSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> f(static_cast<std::size_t>(dim));
    for (double& v : f) v = u(rng);
    out.push_back(sample(f, 0.1 * f[0] - 0.05 * f[1], static_cast<int>(i % 3)));
  }
  return out;
}

TEST(Distill, IdentityKeepsTeacherFeatures) {
  const auto data = feature_set(512, 6, 4);
  TrainConfig cfg;
  cfg.shape = {6, 16, 8};
  cfg.epochs = 5;
  const TrainResult teacher = train(data, cfg);
  const TrainResult student = distill(teacher.model, Corruption::identity(), data, cfg);
  EXPECT_LT(feature_mse(student.model, teacher.model, Corruption::identity(), data), 1e-4);
}

TEST(Distill, AffineShiftIsUndone) {
  const auto data = feature_set(1024, 6, 6);
  TrainConfig cfg;
  cfg.shape = {6, 16, 8};
  cfg.epochs = 20;
  const TrainResult teacher = train(data, cfg);
  const RegressorModel teacher_copy = teacher.model;
  const Corruption c = Corruption::affine(6, 0.2, 11);

  TrainConfig dcfg = cfg;
  dcfg.learning_rate = 1e-3;
  dcfg.epochs = 200;
  const double before = feature_mse(teacher.model, teacher.model, c, data);
  const TrainResult student = distill(teacher.model, c, data, dcfg);
  const double after = feature_mse(student.model, teacher.model, c, data);
  EXPECT_GT(before, 0.0);
  EXPECT_LT(after, 0.05 * before);

  EXPECT_EQ(teacher.model, teacher_copy);
  const auto sap_t = teacher.model.sap_parameters();
  const auto sap_s = student.model.sap_parameters();
  ASSERT_EQ(sap_t.size(), sap_s.size());
  for (std::size_t i = 0; i < sap_t.size(); ++i) EXPECT_EQ(sap_t[i], sap_s[i]);
  EXPECT_EQ(student.model.feature_mean(), teacher.model.feature_mean());
  EXPECT_EQ(student.model.feature_scale(), teacher.model.feature_scale());
}

TEST(OracleDy, StraightCourse) {
  const vosteer::course::Course c("s", {{vosteer::course::SegmentType::kLine, 100, 0, vosteer::course::Command::kStraight}});
  vosteer::vehicle::VehicleState s;
  s.pose = {10, 0, 0};
  EXPECT_EQ(oracle_dy(s, c, 0.5), 0.0);
  s.pose = {10, 0.3, 0};
  // Right triangle: target 0.5 m ahead on the centerline, 0.3 m to the right.
  EXPECT_NEAR(oracle_dy(s, c, 0.5), -0.3, 1e-12);
  s.pose = {10, 0.3, 0.1};
  const auto local = oracle::local_frame({std::cos(0.1), std::sin(0.1)}, {0.5, -0.3});
  EXPECT_NEAR(oracle_dy(s, c, 0.5), local[1], 1e-12);
  s.pose = {10, 8, 0};
  EXPECT_THROW(oracle_dy(s, c, 0.5), vosteer::OffCourse);
}

TEST(OracleDy, CircleSagitta) {
  const double r = 20.0;
  const vosteer::course::Course c(
      "circle", {{vosteer::course::SegmentType::kArc, 2 * std::numbers::pi * r, 1 / r, vosteer::course::Command::kLeft}});
  vosteer::vehicle::VehicleState s;
  s.pose = c.pose_at(7.0);
  const auto predict = oracle_predictor(c, 0.5);
  EXPECT_NEAR(predict(s), 0.25 / (2 * r), 0.02 * 0.25 / (2 * r));
}

TEST(ModelJson, RoundTripIsExact) {
  const RegressorModel m = random_model(ModelShape{5, 7, 3}, 123);
  EXPECT_EQ(model_from_json(model_to_json(m)), m);
}

TEST(ModelJson, RejectsWrongVersionAndShape) {
  std::string text = model_to_json(RegressorModel(ModelShape{2, 2, 2}));
  const auto pos = text.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  std::string bumped = text;
  bumped.replace(pos, 11, "\"version\":9");
  EXPECT_THROW(model_from_json(bumped), vosteer::Error);
  EXPECT_THROW(model_from_json("{}"), vosteer::Error);
  EXPECT_THROW(model_from_json("not json"), vosteer::Error);
}

TEST(LossCurve, Csv) {
  EXPECT_EQ(loss_curve_csv({0.5, 0.25}), "epoch,loss\n1,0.5\n2,0.25\n");
}

}  // namespace
