#include <benchmark/benchmark.h>

#include <string>

#include "namo/blockage_model.hpp"
#include "namo/planner.hpp"
#include "namo/scenario.hpp"
#include "namo/simulator.hpp"

namespace {

std::string data(const std::string& rel) { return std::string(NAMO_DATA_DIR) + "/" + rel; }

void BM_PlanWarehouse(benchmark::State& state) {
  const auto grid = namo::load_map(data("maps/warehouse.map"));
  const namo::InflatedGrid inflated(grid, 0.3);
  const auto cfg = namo::load_scenario(data("scenarios/warehouse_abc.json"));
  const namo::PlanRequest req{cfg.robot.start, cfg.goal, {}};
  for (auto _ : state) benchmark::DoNotOptimize(namo::plan_path(inflated, req));
}
BENCHMARK(BM_PlanWarehouse)->Unit(benchmark::kMillisecond);

void BM_TrajectoryBlockage(benchmark::State& state) {
  const auto grid = namo::load_map(data("maps/warehouse.map"));
  const namo::InflatedGrid inflated(grid, 0.3);
  const auto cfg = namo::load_scenario(data("scenarios/warehouse_abc.json"));
  const auto path = namo::plan_path(inflated, {cfg.robot.start, cfg.goal, {}});
  auto pop = cfg.population;
  pop.free_area = namo::free_area(grid);
  namo::BlockageOptions opt;
  opt.n_samples = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(namo::trajectory_blockage(pop, *path, grid, 0.3, opt));
}
BENCHMARK(BM_TrajectoryBlockage)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_Episode(benchmark::State& state) {
  const namo::Simulator sim(namo::load_scenario(data("scenarios/warehouse_abc.json")));
  const auto policy = namo::Policy::parse("namounc");
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sim.run(policy, seed++));
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMillisecond);

}  // namespace
