#include <benchmark/benchmark.h>

#include <numbers>
#include <vector>

#include "ilvm/dataset.hpp"
#include "ilvm/geometry.hpp"
#include "ilvm/model.hpp"
#include "ilvm/ops.hpp"
#include "ilvm/planner.hpp"
#include "ilvm/sim.hpp"
#include "ilvm/train.hpp"

namespace {

using namespace ilvm;
using ad::Tensor;

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, bool grad) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = uniform(rng, -1, 1);
  return Tensor::from({rows, cols}, std::move(v), grad);
}

std::vector<Scene> yield_go_scenes(std::size_t count) {
  data::DatasetManifest m;
  m.seed = 1;
  m.counts = {{ScenarioKind::yield_go, count}};
  return data::generate_splits(m).train;
}

void BM_AffineForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  auto x = random_matrix(n, 64, rng, true);
  auto w = random_matrix(64, 64, rng, true);
  auto b = random_matrix(1, 64, rng, true);
  for (auto _ : state) {
    auto y = ad::sum(ad::affine(x, w, ad::reshape(b, {64})));
    y.backward();
    benchmark::DoNotOptimize(w.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_AffineForwardBackward)->Arg(8)->Arg(64)->Arg(512);

void BM_SimForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  nn::ParameterSet params;
  model::Sim sim(params, "sim", {}, rng);
  std::vector<geo::Pose2> poses;
  for (std::size_t i = 0; i < n; ++i)
    poses.emplace_back(uniform(rng, -30, 30), uniform(rng, -30, 30), uniform(rng, -3, 3));
  const std::vector<std::size_t> groups = {n};
  const auto graph = model::fully_connected(poses, groups, 0.1);
  const auto h = random_matrix(n, 64, rng, false);
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(sim(h, graph));
}
BENCHMARK(BM_SimForward)->Arg(2)->Arg(8)->Arg(32);

void BM_ObbIou(benchmark::State& state) {
  Rng rng(3);
  std::vector<geo::OrientedBox> boxes;
  for (int i = 0; i < 256; ++i)
    boxes.push_back({geo::Pose2(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)), 4.5, 2.0});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(geo::obb_iou(boxes[i % 256], boxes[(i * 7 + 1) % 256]));
    ++i;
  }
}
BENCHMARK(BM_ObbIou);

void BM_SampleScenes(benchmark::State& state) {
  const auto scenes = yield_go_scenes(80);
  model::IlvmModel m(model::ModelConfig{}, 4);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(m.sample(std::span<const Scene>(scenes), 15, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scenes.size()));
}
BENCHMARK(BM_SampleScenes)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto scenes = yield_go_scenes(80);
  model::IlvmModel m(model::ModelConfig{}, 5);
  model::TrainOptions opts;
  opts.steps = 1;
  opts.batch_size = 32;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model::train(m, scenes, opts));
    ++opts.seed;
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Plan(benchmark::State& state) {
  const auto scenes = yield_go_scenes(10);
  model::IlvmModel m(model::ModelConfig{}, 6);
  const auto samples = m.sample(scenes.front(), static_cast<std::size_t>(state.range(0)), 1);
  const auto& ego = scenes.front().actors.front();
  const auto set = plan::make_candidates(ego.pose, 6.0, ego.length, ego.width);
  for (auto _ : state) benchmark::DoNotOptimize(plan::plan(set, samples, {}, 0));
}
BENCHMARK(BM_Plan)->Arg(15)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
