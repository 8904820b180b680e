// Microbenchmarks for the per-round hot path: snapshot graph construction,
// Prim, window intersection, epoch search, and a full simulated round.

#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include <dgsim/engine.hpp>
#include <dgsim/gatherers.hpp>
#include <dgsim/mobility.hpp>
#include <dgsim/rng.hpp>
#include <dgsim/topology.hpp>

using namespace dgsim;

namespace {

MobilityProfile desk_profile(std::uint32_t nodes, Round horizon, double v_max) {
  FieldConfig field;
  MobilityConfig mob;
  mob.node_count = nodes;
  mob.v_max = v_max;
  mob.horizon_rounds = horizon;
  mob.seed = 4242;
  return generate_profile(field, mob);
}

void BM_BuildSnapshotGraph(benchmark::State& state) {
  const auto nodes = static_cast<std::uint32_t>(state.range(0));
  const auto profile = desk_profile(nodes, 2, 3.0);
  const NodeSet live(nodes, true);
  for (auto _ : state) {
    auto g = StaticGraph::build(profile.row(0), live, 25.0, 0);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_BuildSnapshotGraph)->Arg(100)->Arg(200);

void BM_PrimMst(benchmark::State& state) {
  const auto nodes = static_cast<std::uint32_t>(state.range(0));
  const auto profile = desk_profile(nodes, 2, 3.0);
  const NodeSet live(nodes, true);
  const auto g = StaticGraph::build(profile.row(0), live, 60.0, 0);
  for (auto _ : state) {
    auto tree = prim_mst(g);
    benchmark::DoNotOptimize(tree);
  }
}
BENCHMARK(BM_PrimMst)->Arg(100)->Arg(200);

void BM_IntersectExtend(benchmark::State& state) {
  const auto profile = desk_profile(100, 64, 10.0);
  const NodeSet live(100, true);
  auto window = MobileGraph::from_static(StaticGraph::build(profile.row(0), live, 25.0, 0));
  for (auto _ : state) {
    auto next = intersect_extend(window, StaticGraph::build(profile.row(1), live, 25.0, 1));
    benchmark::DoNotOptimize(next);
  }
}
BENCHMARK(BM_IntersectExtend);

void BM_EpochSearch(benchmark::State& state) {
  const auto profile = desk_profile(100, 512, state.range(0) == 0 ? 3.0 : 20.0);
  const NodeSet live(100, true);
  for (auto _ : state) {
    auto epoch = max_stability_find_epoch(profile, live, 25.0, 0, 511);
    benchmark::DoNotOptimize(epoch);
  }
}
BENCHMARK(BM_EpochSearch)->Arg(0)->Arg(1);

void BM_SimulatedRound(benchmark::State& state) {
  // Whole-run cost divided by rounds: amortized per-round price of the
  // baseline policy at desk scale under sufficient energy.
  const auto profile = desk_profile(100, 2000, 10.0);
  SimConfig cfg;
  cfg.mobility = profile.config();
  cfg.tx_range = 25.0;
  cfg.policy = Policy::MstDg;
  cfg.sufficient_energy = true;
  std::uint64_t rounds = 0;
  for (auto _ : state) {
    auto result = run_simulation(cfg, profile);
    rounds += result.rounds_elapsed;
    benchmark::DoNotOptimize(result);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(rounds));
}
BENCHMARK(BM_SimulatedRound)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
