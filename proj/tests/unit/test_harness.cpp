#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "vosteer/course.hpp"
#include "vosteer/errors.hpp"
#include "vosteer/harness.hpp"
#include "vosteer/rng.hpp"

namespace {

using namespace vosteer::harness;
using vosteer::course::builtin_course;
using vosteer::course::Course;

Course with_half_width(const Course& c, double hw) { return Course(c.id(), c.segments(), hw); }

void expect_same(const EvalReport& a, const EvalReport& b) {
  EXPECT_EQ(a.in_track_ratio, b.in_track_ratio);
  EXPECT_EQ(a.mean_abs_lateral_offset, b.mean_abs_lateral_offset);
  EXPECT_EQ(a.max_abs_lateral_offset, b.max_abs_lateral_offset);
  EXPECT_EQ(a.mean_speed, b.mean_speed);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.in_track_steps, b.in_track_steps);
  EXPECT_EQ(a.crashed, b.crashed);
  EXPECT_EQ(a.crash_step, b.crash_step);
  EXPECT_EQ(a.path, b.path);
}

// Small but real pipeline so the model-driven tests stay quick.
SweepConfig quick_sweep() {
  SweepConfig c;
  c.pipeline.train_steps = 1500;
  c.pipeline.train.seed = 3;
  c.pipeline.generation.seed = 4;
  c.episode.duration = 15.0;
  c.episode.seed = 5;
  c.starts = 4;
  c.repeats = 2;
  return c;
}

TEST(EpisodeConfig, Validation) {
  EpisodeConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.steps(), 1800);
  c.duration = 0.01;
  EXPECT_THROW(c.validate(), vosteer::InvalidArgument);
  c = {};
  c.perturbation_pct = -0.1;
  EXPECT_THROW(c.validate(), vosteer::InvalidArgument);
  c = {};
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), vosteer::InvalidArgument);
  c = {};
  EXPECT_DOUBLE_EQ(c.effective_alpha(), 10.0);
}

TEST(Dynamics, Names) {
  EXPECT_EQ(dynamics_from_name("dynamic"), Dynamics::kDynamic);
  EXPECT_STREQ(dynamics_name(Dynamics::kKinematic), "kinematic");
  EXPECT_THROW(dynamics_from_name("warp"), vosteer::InvalidArgument);
}

TEST(Starts, SpacingAndSigns) {
  const Course c = builtin_course("benchmark");
  const auto s = evaluation_starts(c, 4, 0.4, 0.0, 1);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_NEAR(s[1].s - s[0].s, c.length() / 4, 1e-9);
  EXPECT_EQ(s[0].lateral, 0.4);
  EXPECT_EQ(s[1].lateral, -0.4);
  EXPECT_EQ(s[0].heading_offset, 0.0);
  const auto j = evaluation_starts(c, 50, 0.0, 0.1, 1);
  for (const auto& p : j) EXPECT_LE(std::abs(p.heading_offset), 0.1);
  EXPECT_EQ(evaluation_starts(c, 50, 0.0, 0.1, 1)[7].heading_offset, j[7].heading_offset);
}

TEST(Episode, OracleStaysCentered) {
  const Course c = builtin_course("benchmark");
  EpisodeConfig cfg;
  const EvalReport r = run_episode(c, oracle_policy(c, cfg.dx_nominal), {}, cfg);
  EXPECT_EQ(r.in_track_ratio, 1.0);
  EXPECT_LT(r.max_abs_lateral_offset, 0.05);
  EXPECT_FALSE(r.crashed);
  EXPECT_EQ(r.steps, cfg.steps());
  EXPECT_NEAR(r.mean_speed, 5.0, 0.1);
}

TEST(Episode, OracleOnEveryBuiltin) {
  for (const char* name : {"gentle", "sharp"}) {
    const Course c = builtin_course(name);
    EpisodeConfig cfg;
    cfg.duration = 30.0;
    const auto reports = evaluate_batch(c, oracle_policy(c, 0.5), evaluation_starts(c, 4, 0.4, 0.03, 2), cfg);
    for (const auto& r : reports) EXPECT_EQ(r.in_track_ratio, 1.0) << name;
  }
}

TEST(Episode, DeterministicWithPerturbation) {
  const Course c = builtin_course("benchmark");
  EpisodeConfig cfg;
  cfg.duration = 20.0;
  cfg.perturbation_pct = 0.2;
  cfg.seed = 9;
  const StartPose start{10.0, 0.3, 0.02};
  const EvalReport a = run_episode(c, oracle_policy(c, 0.5), start, cfg, true);
  const EvalReport b = run_episode(c, oracle_policy(c, 0.5), start, cfg, true);
  expect_same(a, b);
  EXPECT_EQ(a.path.size(), static_cast<std::size_t>(cfg.steps()) + 1);
  cfg.seed = 10;
  EXPECT_NE(run_episode(c, oracle_policy(c, 0.5), start, cfg, true).path, a.path);
}

TEST(Episode, CrashOutCountsRemainingStepsOut) {
  const Course c = builtin_course("benchmark");
  EpisodeConfig cfg;
  cfg.duration = 20.0;
  const Policy hard_left = [](const vosteer::vehicle::VehicleState&, std::uint64_t) { return 1.0; };
  const EvalReport r = run_episode(c, hard_left, {}, cfg);
  EXPECT_TRUE(r.crashed);
  EXPECT_GT(r.crash_step, 0);
  EXPECT_FALSE(r.crash_reason.empty());
  EXPECT_LE(r.in_track_steps, r.crash_step);
  EXPECT_NEAR(r.in_track_ratio, static_cast<double>(r.in_track_steps) / r.steps, 1e-15);
  EXPECT_LT(r.in_track_ratio, 0.1);
}

TEST(Episode, RatioGrowsWithCorridor) {
  const Course base = builtin_course("benchmark");
  EpisodeConfig cfg;
  cfg.duration = 30.0;
  cfg.perturbation_pct = 0.3;
  cfg.seed = 12;
  double previous = -1.0;
  for (double hw : {0.05, 0.1, 0.2, 0.5, 1.75}) {
    const Course c = with_half_width(base, hw);
    const EvalReport r = run_episode(c, oracle_policy(c, 0.5), {0.0, 0.0, 0.0}, cfg);
    EXPECT_GE(r.in_track_ratio, previous) << hw;
    EXPECT_GE(r.in_track_ratio, 0.0);
    EXPECT_LE(r.in_track_ratio, 1.0);
    EXPECT_EQ(r.in_track_ratio == 1.0, r.max_abs_lateral_offset <= hw) << hw;
    previous = r.in_track_ratio;
  }
}

TEST(Batch, SerialMatchesParallel) {
  const Course c = builtin_course("sharp");
  EpisodeConfig cfg;
  cfg.duration = 10.0;
  cfg.perturbation_pct = 0.25;
  cfg.seed = 2;
  const auto starts = evaluation_starts(c, 8, 0.4, 0.03, 3);
  const auto a = evaluate_batch(c, oracle_policy(c, 0.5), starts, cfg, vosteer::Execution::kSerial);
  const auto b = evaluate_batch(c, oracle_policy(c, 0.5), starts, cfg, vosteer::Execution::kParallel);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) expect_same(a[i], b[i]);
}

TEST(Summary, Statistics) {
  const auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_DOUBLE_EQ(s, std::sqrt(1.25));
  EvalReport a, b;
  a.in_track_ratio = 1.0;
  b.in_track_ratio = 0.5;
  b.crashed = true;
  const Summary sum = summarize({a, b});
  EXPECT_EQ(sum.episodes, 2);
  EXPECT_DOUBLE_EQ(sum.mean_ratio, 0.75);
  EXPECT_DOUBLE_EQ(sum.std_ratio, 0.25);
  EXPECT_EQ(sum.crashes, 1);
}

TEST(Generation, CenterlineRunHugsCenter) {
  const Course c = builtin_course("benchmark");
  GenerationConfig g;
  g.count = 1;
  const auto runs = generate_runs(c, g);
  ASSERT_EQ(runs.size(), 1u);
  const auto& t = runs[0].truth;
  EXPECT_GT(t.path_length(), 0.95 * c.length());
  for (const auto& f : t.frames()) EXPECT_LT(c.project(f.pose.x(), f.pose.y()).distance, 0.05);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(runs[0].odometry[i].pose, t[i].pose);
}

TEST(Generation, ProfilesAreNested) {
  const Course c = builtin_course("sharp");
  GenerationConfig g;
  g.seed = 8;
  g.count = 3;
  const auto small = generate_runs(c, g);
  g.count = 5;
  const auto large = generate_runs(c, g, vosteer::Execution::kSerial);
  for (std::size_t i = 0; i < small.size(); ++i) {
    ASSERT_EQ(small[i].truth.size(), large[i].truth.size());
    for (std::size_t k = 0; k < small[i].truth.size(); ++k) EXPECT_EQ(small[i].truth[k].pose, large[i].truth[k].pose);
  }
  const auto p0 = driver_profile(g, c.corridor_half_width(), 0);
  EXPECT_EQ(p0.offset, 0.0);
  EXPECT_EQ(p0.amplitude, 0.0);
  for (int i = 1; i < 5; ++i) {
    const auto p = driver_profile(g, c.corridor_half_width(), i);
    EXPECT_LE(std::abs(p.offset) + p.amplitude, g.max_offset_fraction * c.corridor_half_width() + 1e-12);
  }
}

TEST(Generation, NoiseMakesOdometryDrift) {
  const Course c = builtin_course("benchmark");
  GenerationConfig g;
  g.count = 2;
  g.noise.translation_sigma = 0.002;
  g.noise.drift_rate = 0.002;
  const auto runs = generate_runs(c, g);
  const auto& last_truth = runs[1].truth.frames().back().pose;
  const auto& last_vo = runs[1].odometry.frames().back().pose;
  EXPECT_GT(std::hypot(last_truth.x() - last_vo.x(), last_truth.y() - last_vo.y()), 0.1);
}

TEST(Pipeline, EpochsForSteps) {
  EXPECT_EQ(epochs_for_steps(640, 64, 100), 10);
  EXPECT_EQ(epochs_for_steps(650, 64, 100), 10);
  EXPECT_EQ(epochs_for_steps(100000, 64, 10), 1);
}

TEST(Pipeline, TrainOnCourseIsDeterministic) {
  const Course c = builtin_course("benchmark");
  PipelineConfig p = quick_sweep().pipeline;
  p.generation.count = 2;
  const TrainedModel a = train_on_course(c, p);
  const TrainedModel b = train_on_course(c, p);
  EXPECT_EQ(*a.model, *b.model);
  EXPECT_EQ(a.trajectories, 2);
  EXPECT_GT(a.samples, 1000u);
}

TEST(Sweep, PerturbationLevelZeroMatchesBaseline) {
  const Course c = builtin_course("benchmark");
  SweepConfig cfg = quick_sweep();
  const SweepResult r = sweep_perturbation(c, {0.0}, {2}, cfg);
  ASSERT_EQ(r.summary.size(), 1u);
  ASSERT_TRUE(r.summary[0].error.empty()) << r.summary[0].error;

  PipelineConfig p = cfg.pipeline;
  p.generation.count = 2;
  const TrainedModel m = train_on_course(c, p);
  const Policy policy = model_policy(m.model, c, cfg.pipeline.dataset.observation);
  const auto starts = evaluation_starts(c, cfg.starts, 0.0, cfg.heading_jitter, cfg.episode.seed);
  ASSERT_EQ(r.episodes.size(), starts.size() * static_cast<std::size_t>(cfg.repeats));
  for (const auto& row : r.episodes) {
    EpisodeConfig e = cfg.episode;
    e.seed = vosteer::rng::mix(cfg.episode.seed, static_cast<std::uint64_t>(row.start));
    expect_same(row.report, run_episode(c, policy, starts[static_cast<std::size_t>(row.start)], e));
  }
  EXPECT_EQ(r.summary[0].repeat_std, 0.0);
}

TEST(Sweep, SerialMatchesParallel) {
  const Course c = builtin_course("sharp");
  SweepConfig cfg = quick_sweep();
  cfg.starts = 3;
  const SweepResult a = sweep_trajectories(c, {1, 2}, cfg);
  cfg.exec = vosteer::Execution::kSerial;
  const SweepResult b = sweep_trajectories(c, {1, 2}, cfg);
  EXPECT_EQ(episodes_csv(a.episodes), episodes_csv(b.episodes));
  EXPECT_EQ(summary_csv(a.summary), summary_csv(b.summary));
}

TEST(Sweep, IdenticalTrajectoriesAddNothing) {
  const Course c = builtin_course("benchmark");
  SweepConfig cfg = quick_sweep();
  cfg.pipeline.train_steps = 6000;
  cfg.starts = 10;
  cfg.episode.duration = 30.0;
  const SweepResult one = sweep_trajectories(c, {1}, cfg);
  cfg.pipeline.generation.identical = true;
  const SweepResult many = sweep_trajectories(c, {4}, cfg);
  ASSERT_TRUE(one.summary[0].error.empty());
  ASSERT_TRUE(many.summary[0].error.empty());
  EXPECT_EQ(many.summary[0].samples, 4 * one.summary[0].samples);
  EXPECT_NEAR(many.summary[0].summary.mean_ratio, one.summary[0].summary.mean_ratio, 0.1);
}

TEST(Sweep, Validation) {
  const Course c = builtin_course("benchmark");
  SweepConfig cfg = quick_sweep();
  EXPECT_THROW(sweep_trajectories(c, {}, cfg), vosteer::InvalidArgument);
  EXPECT_THROW(sweep_trajectories(c, {0}, cfg), vosteer::InvalidArgument);
  EXPECT_THROW(sweep_perturbation(c, {0.8}, {1}, cfg), vosteer::InvalidArgument);
  EXPECT_THROW(sweep_speed(c, {-1.0}, {1}, cfg), vosteer::InvalidArgument);
  cfg.repeats = 0;
  EXPECT_THROW(sweep_perturbation(c, {0.1}, {1}, cfg), vosteer::InvalidArgument);
}

TEST(Heldout, SameGeometryDifferentIdMatchesSameCourse) {
  const Course a = builtin_course("benchmark");
  const Course b("benchmark-copy", a.segments(), a.corridor_half_width());
  SweepConfig cfg = quick_sweep();
  cfg.pipeline.generation.count = 2;
  const HeldoutResult r = eval_heldout(a, b, cfg);
  EXPECT_EQ(r.heldout.mean_ratio, r.same_course.mean_ratio);
  EXPECT_EQ(r.oracle.mean_ratio, 1.0);
  EXPECT_THROW(eval_heldout(a, a, cfg), vosteer::InvalidArgument);
}

TEST(Reports, CsvAndSvg) {
  EXPECT_EQ(format_g6(0.123456789), "0.123457");
  EXPECT_EQ(format_g6(-0.0), "0");
  EpisodeRow row;
  row.label = "N=1";
  row.trajectories = 1;
  row.report.in_track_ratio = 0.987654321;
  row.report.steps = 10;
  const std::string e = episodes_csv({row});
  EXPECT_NE(e.find("0.987654"), std::string::npos);
  EXPECT_EQ(e.find("0.9876543"), std::string::npos);
  SummaryRow srow;
  srow.label = "N=1,level=0.1";
  const std::string s = summary_csv({srow});
  EXPECT_NE(s.find("\"N=1,level=0.1\""), std::string::npos);

  const Course c = builtin_course("sharp");
  EpisodeConfig cfg;
  cfg.duration = 5.0;
  const EvalReport r = run_episode(c, oracle_policy(c, 0.5), {}, cfg, true);
  const std::string svg = render_svg(c, {r.path});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

}  // namespace
