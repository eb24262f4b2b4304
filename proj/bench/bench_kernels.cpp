// Serial reference vs OpenMP kernel, pairwise per workload.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cbf_shield/batch.hpp"
#include "cbf_shield/perception.hpp"

namespace {

using namespace cbf_shield;

std::vector<BoundingBox> random_boxes(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(5.0, 195.0), len(1.0, 6.0), ang(-1.5, 1.5);
  std::vector<BoundingBox> boxes;
  for (int i = 0; i < n; ++i) {
    const double l = len(rng);
    boxes.push_back({pos(rng), pos(rng), l, 0.5 * l, ang(rng)});
  }
  return boxes;
}

OccupancyGrid busy_grid() {
  OccupancyGrid grid({0.0, 0.0}, 0.2, 1000, 1000);
  const auto shapes = random_boxes(400, 7);
  rasterize_serial(grid, shapes);
  return grid;
}

void BM_CoverageSerial(benchmark::State& state) {
  const auto grid = busy_grid();
  const auto boxes = random_boxes(200, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(subtract_covered_cells_serial(grid, boxes, state.range(0) * 0.5));
}

void BM_CoverageParallel(benchmark::State& state) {
  const auto grid = busy_grid();
  const auto boxes = random_boxes(200, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(subtract_covered_cells(grid, boxes, state.range(0) * 0.5));
}

void BM_RasterizeSerial(benchmark::State& state) {
  const auto shapes = random_boxes(400, 11);
  for (auto _ : state) {
    OccupancyGrid grid({0.0, 0.0}, 0.2, 1000, 1000);
    rasterize_serial(grid, shapes);
    benchmark::DoNotOptimize(grid);
  }
}

void BM_RasterizeParallel(benchmark::State& state) {
  const auto shapes = random_boxes(400, 11);
  for (auto _ : state) {
    OccupancyGrid grid({0.0, 0.0}, 0.2, 1000, 1000);
    rasterize(grid, shapes);
    benchmark::DoNotOptimize(grid);
  }
}

constexpr const char* kBatchScenario = R"({
  "name": "bench",
  "road": {"pieces": [{"straight": 400}], "d_min": -5.25, "d_max": 5.25},
  "ego": {"s": 10, "d": 0, "v": 15},
  "background": {"traffic": {"count": 8, "lanes": [-3.5, 0, 3.5]}},
  "sim": {"duration": 5, "dt": 0.05, "seed": 1}
})";

void BM_BatchSerial(benchmark::State& state) {
  const auto spec = parse_scenario(kBatchScenario);
  BatchOptions options{8, {AblationMode::none, AblationMode::full}};
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(spec, options));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto spec = parse_scenario(kBatchScenario);
  BatchOptions options{8, {AblationMode::none, AblationMode::full}};
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(spec, options));
}

}  // namespace

BENCHMARK(BM_CoverageSerial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoverageParallel)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RasterizeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RasterizeParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
