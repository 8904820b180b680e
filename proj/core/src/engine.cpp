#include "dgsim/engine.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <thread>

#include "dgsim/errors.hpp"

namespace dgsim {

void SimConfig::validate() const {
  dgsim::validate(field);
  dgsim::validate(mobility);
  energy.validate();
  if (!(tx_range > 0.0)) throw ConfigError("tx_range must be positive");
  if (sensing_range < 0.0) throw ConfigError("sensing_range must not be negative");
  if (sensing_range > 0.0 && tx_range < 2.0 * sensing_range) {
    throw ConfigError("tx_range must be at least twice the sensing_range");
  }
}

namespace {

std::unique_ptr<Gatherer> make_gatherer(const SimConfig& cfg, const MobilityProfile& profile) {
  const std::uint64_t leader_seed = stream_seed(cfg.run_seed, "leader");
  if (cfg.policy == Policy::MaxStability) {
    return std::make_unique<MaxStabilityGatherer>(profile, cfg.tx_range,
                                                  cfg.mobility.horizon_rounds, leader_seed);
  }
  return std::make_unique<MstDgGatherer>(profile, cfg.tx_range, leader_seed);
}

void check_profile(const SimConfig& cfg, const MobilityProfile& profile) {
  if (profile.node_count() != cfg.mobility.node_count) {
    throw ConfigError("profile node count does not match the configuration");
  }
  if (profile.horizon_rounds() < cfg.mobility.horizon_rounds) {
    throw ConfigError("profile horizon is shorter than the configured horizon");
  }
  if (!(profile.field() == cfg.field)) {
    throw ConfigError("profile field does not match the configuration");
  }
  if (profile.config().round_period != cfg.mobility.round_period) {
    throw ConfigError("profile round period does not match the configuration");
  }
}

}  // namespace

RunResult run_simulation(const SimConfig& cfg, const MobilityProfile& profile, TreeTraceSink trace,
                         RoundObserver observer) {
  cfg.validate();
  check_profile(cfg, profile);

  const std::uint32_t n = cfg.mobility.node_count;
  const double period = cfg.mobility.round_period;
  const double sensing = cfg.resolved_sensing_range();
  const Round horizon = cfg.mobility.horizon_rounds;

  RunResult result;
  result.policy = cfg.policy;
  result.run_seed = cfg.run_seed;
  result.node_count = n;
  result.round_period_s = period;
  result.coverage_loss_times.assign(kCoverageTargets, -1.0);

  EnergyLedger ledger(cfg.effective_initial_energy(), n);
  auto gatherer = make_gatherer(cfg, profile);
  if (trace) gatherer->set_trace(std::move(trace));

  SplitMix64 coverage_rng(stream_seed(cfg.run_seed, "coverage"));
  std::vector<Point> fixed_probes;
  if (cfg.fixed_probes) fixed_probes = sample_probes(coverage_rng, cfg.field);

  CoverageLossTracker tracker;
  const NodeSet all_nodes = NodeSet::full(n);
  std::vector<NodeId> round_failures;
  Round last_simulated = 0;

  for (Round r = 0; r < horizon; ++r) {
    const std::span<const Point> positions = profile.row(r);
    const double now = static_cast<double>(r + 1) * period;
    last_simulated = r;
    round_failures.clear();

    const bool gathered =
        gatherer->prepare_round(r, cfg.energy, ledger, now, round_failures);
    if (gathered) {
      auto failed = charge_gathering_round(ledger, cfg.energy, gatherer->tree(), positions,
                                           cfg.field.sink, now);
      round_failures.insert(round_failures.end(), failed.begin(), failed.end());
      ++result.rounds_completed;
    } else {
      ++result.no_tree_rounds;
    }

    if (!round_failures.empty()) {
      gatherer->on_failures(r, cfg.energy, ledger, now, round_failures);
      for (std::size_t i = 0; i < round_failures.size(); ++i) {
        result.failure_times.push_back(now);
      }
    }

    double loss;
    if (cfg.fixed_probes) {
      loss = uncovered_fraction(fixed_probes, positions, ledger.live(), sensing);
    } else {
      loss = coverage_fraction(positions, ledger.live(), sensing, coverage_rng, cfg.field);
    }
    tracker.update(loss, now);

    ++result.rounds_elapsed;
    if (observer) observer(r, now, ledger);

    if (ledger.live().count() < n &&
        network_lifetime_check(ledger.live(), all_nodes, positions, cfg.tx_range)) {
      result.network_lifetime_s = now;
      break;
    }
  }
  gatherer->finish(last_simulated);

  if (!result.failure_times.empty()) result.node_lifetime_s = result.failure_times.front();
  result.coverage_loss_times = tracker.times();
  result.discovery_count = gatherer->discovery_count();
  result.leader_sequence.assign(gatherer->leader_sequence().begin(),
                                gatherer->leader_sequence().end());
  return result;
}

std::pair<RunResult, RunResult> run_pairwise(SimConfig cfg, const MobilityProfile& profile) {
  cfg.policy = Policy::MaxStability;
  RunResult max_stability = run_simulation(cfg, profile);
  cfg.policy = Policy::MstDg;
  RunResult mst_dg = run_simulation(cfg, profile);
  return {std::move(max_stability), std::move(mst_dg)};
}

void ExperimentGrid::validate() const {
  base.validate();
  if (tx_ranges.empty()) throw ConfigError("grid.tx_ranges must not be empty");
  if (v_maxes.empty()) throw ConfigError("grid.v_maxes must not be empty");
  if (static_counts.empty()) throw ConfigError("grid.static_counts must not be empty");
  if (profiles_per_cell == 0) throw ConfigError("grid.profiles_per_cell must be positive");
  for (const double tx : tx_ranges) {
    if (!(tx > 0.0)) throw ConfigError("grid.tx_ranges entries must be positive");
    if (base.sensing_range > 0.0 && tx < 2.0 * base.sensing_range) {
      throw ConfigError("grid.tx_ranges entry below twice the sensing_range");
    }
  }
  for (const double v : v_maxes) {
    if (!(v > 0.0)) throw ConfigError("grid.v_maxes entries must be positive");
  }
  for (const std::uint32_t s : static_counts) {
    if (s > base.mobility.node_count) {
      throw ConfigError("grid.static_counts entry exceeds the node count");
    }
  }
}

std::uint64_t profile_seed(std::uint64_t base_seed, double v_max, std::uint32_t static_count,
                           std::uint32_t profile_index) {
  std::uint64_t s = stream_seed(base_seed, "profile");
  s = mix_seed(s, seed_component(v_max));
  s = mix_seed(s, static_count);
  return mix_seed(s, profile_index);
}

std::uint64_t run_seed_for(std::uint64_t base_seed, double tx_range, double v_max,
                           std::uint32_t static_count, std::uint32_t profile_index) {
  std::uint64_t s = stream_seed(base_seed, "run");
  s = mix_seed(s, seed_component(tx_range));
  s = mix_seed(s, seed_component(v_max));
  s = mix_seed(s, static_count);
  return mix_seed(s, profile_index);
}

namespace {

// One unit of grid work: a single profile of one (v_max, static_count)
// batch, run pairwise for every tx_range.
struct GridTask {
  std::size_t vm_index;
  std::size_t sc_index;
  std::uint32_t profile_index;
};

}  // namespace

std::vector<CellResult> run_grid(const ExperimentGrid& grid, unsigned threads) {
  grid.validate();

  const std::size_t n_tx = grid.tx_ranges.size();
  const std::size_t n_vm = grid.v_maxes.size();
  const std::size_t n_sc = grid.static_counts.size();

  std::vector<CellResult> cells(n_tx * n_vm * n_sc);
  auto cell_at = [&](std::size_t tx, std::size_t vm, std::size_t sc) -> CellResult& {
    return cells[(tx * n_vm + vm) * n_sc + sc];
  };
  for (std::size_t tx = 0; tx < n_tx; ++tx) {
    for (std::size_t vm = 0; vm < n_vm; ++vm) {
      for (std::size_t sc = 0; sc < n_sc; ++sc) {
        CellResult& cell = cell_at(tx, vm, sc);
        cell.key = {grid.tx_ranges[tx], grid.v_maxes[vm], grid.static_counts[sc]};
        cell.max_stability.resize(grid.profiles_per_cell);
        cell.mst_dg.resize(grid.profiles_per_cell);
      }
    }
  }

  std::vector<GridTask> tasks;
  tasks.reserve(n_vm * n_sc * grid.profiles_per_cell);
  for (std::size_t vm = 0; vm < n_vm; ++vm) {
    for (std::size_t sc = 0; sc < n_sc; ++sc) {
      for (std::uint32_t p = 0; p < grid.profiles_per_cell; ++p) {
        tasks.push_back({vm, sc, p});
      }
    }
  }

  auto run_task = [&](const GridTask& task) {
    const double v_max = grid.v_maxes[task.vm_index];
    const std::uint32_t static_count = grid.static_counts[task.sc_index];

    MobilityConfig mobility = grid.base.mobility;
    mobility.v_max = v_max;
    mobility.static_count = static_count;
    mobility.seed = profile_seed(grid.base_seed, v_max, static_count, task.profile_index);
    const MobilityProfile profile = generate_profile(grid.base.field, mobility);

    for (std::size_t tx = 0; tx < n_tx; ++tx) {
      SimConfig cfg = grid.base;
      cfg.mobility = mobility;
      cfg.tx_range = grid.tx_ranges[tx];
      cfg.run_seed = run_seed_for(grid.base_seed, cfg.tx_range, v_max, static_count,
                                  task.profile_index);
      auto [max_stability, mst_dg] = run_pairwise(cfg, profile);
      CellResult& cell = cell_at(tx, task.vm_index, task.sc_index);
      cell.max_stability[task.profile_index] = std::move(max_stability);
      cell.mst_dg[task.profile_index] = std::move(mst_dg);
    }
  };

  if (threads <= 1) {
    for (const GridTask& task : tasks) run_task(task);
  } else {
    // Tasks write to disjoint, preallocated slots; a shared cursor hands
    // them out. Any interleaving yields the same results.
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          run_task(tasks[i]);
        } catch (...) {
          const std::scoped_lock lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  for (CellResult& cell : cells) {
    cell.max_stability_summary = aggregate_batch(cell.max_stability);
    cell.mst_dg_summary = aggregate_batch(cell.mst_dg);
  }
  return cells;
}

}  // namespace dgsim
