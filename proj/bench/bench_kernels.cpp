// Serial vs OpenMP timings for the two parallel kernels: pairwise reference
// selection and batched closed-loop evaluation.

#include <cmath>
#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "vosteer/course.hpp"
#include "vosteer/harness.hpp"
#include "vosteer/trajectory.hpp"

namespace {

namespace hn = vosteer::harness;
namespace tr = vosteer::trajectory;

std::vector<tr::Trajectory> make_bundle(const vosteer::course::Course& c, int n) {
  std::vector<tr::Trajectory> out;
  for (int i = 0; i < n; ++i) {
    const double offset = 0.9 * std::sin(1.7 * i);
    std::vector<tr::Frame> frames;
    for (double s = 0.0; s < c.length(); s += 0.05) {
      const double lat = offset + 0.2 * std::sin(2 * std::numbers::pi * s / (30.0 + 3 * i));
      frames.push_back({s, c.offset_pose_at(s, lat)});
    }
    out.emplace_back(i, std::move(frames), tr::Provenance::kGroundTruth);
  }
  return out;
}

void select_reference(benchmark::State& state, vosteer::Execution exec) {
  const auto course = vosteer::course::builtin_course("benchmark");
  const auto bundle = make_bundle(course, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tr::select_reference(bundle, {}, exec));
}

void evaluate_batch(benchmark::State& state, vosteer::Execution exec) {
  const auto course = vosteer::course::builtin_course("benchmark");
  hn::EpisodeConfig cfg;
  cfg.duration = 20.0;
  cfg.perturbation_pct = 0.1;
  const auto starts = hn::evaluation_starts(course, static_cast<int>(state.range(0)), 0.4, 0.03, 1);
  const auto policy = hn::oracle_policy(course, cfg.dx_nominal);
  for (auto _ : state) benchmark::DoNotOptimize(hn::evaluate_batch(course, policy, starts, cfg, exec));
}

BENCHMARK_CAPTURE(select_reference, serial, vosteer::Execution::kSerial)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(select_reference, parallel, vosteer::Execution::kParallel)
    ->Arg(4)
    ->Arg(10)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK_CAPTURE(evaluate_batch, serial, vosteer::Execution::kSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(evaluate_batch, parallel, vosteer::Execution::kParallel)
    ->Arg(8)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
