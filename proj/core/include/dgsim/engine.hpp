#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "dgsim/energy.hpp"
#include "dgsim/gatherers.hpp"
#include "dgsim/metrics.hpp"
#include "dgsim/mobility.hpp"

namespace dgsim {

// Initial energy used under --sufficient-energy: large enough that no
// desk-scale run can drain it, so failures never occur.
inline constexpr double kSufficientEnergyJoules = 1e18;

struct SimConfig {
  FieldConfig field;
  MobilityConfig mobility;
  EnergyConfig energy;
  double tx_range = 25.0;
  // 0 means "derive as tx_range / 2"; an explicit value must satisfy
  // tx_range >= 2 * sensing_range.
  double sensing_range = 0.0;
  Policy policy = Policy::MaxStability;
  std::uint64_t run_seed = 0;
  bool sufficient_energy = false;
  // Sample the 100 coverage probes once per run instead of every round.
  bool fixed_probes = false;

  double resolved_sensing_range() const {
    return sensing_range > 0.0 ? sensing_range : tx_range / 2.0;
  }
  double effective_initial_energy() const {
    return sufficient_energy ? kSufficientEnergyJoules : energy.initial_energy;
  }

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Watches a run round by round; invoked after each round's failures are
// final. Used for the per-round energy dump.
using RoundObserver = std::function<void(Round r, double time_s, const EnergyLedger& ledger)>;

// Simulates one run: rounds at the configured period until the network
// lifetime is reached or the horizon is exhausted. Deterministic given
// (cfg, profile). The profile must cover the configured horizon and match
// the field, node count, and round period; mismatches throw ConfigError.
RunResult run_simulation(const SimConfig& cfg, const MobilityProfile& profile,
                         TreeTraceSink trace = {}, RoundObserver observer = {});

// Runs both policies over the same profile with identical derived RNG
// streams, so any difference is attributable to the policy alone. Returns
// (look-ahead, baseline).
std::pair<RunResult, RunResult> run_pairwise(SimConfig cfg, const MobilityProfile& profile);

struct ExperimentGrid {
  std::vector<double> tx_ranges{25.0, 40.0};
  std::vector<double> v_maxes{3.0, 10.0, 20.0};
  std::vector<std::uint32_t> static_counts{0, 20, 50, 80};
  std::uint32_t profiles_per_cell = 20;
  std::uint64_t base_seed = 0;
  // Template for every cell: field, energy, node count, horizon, flags. The
  // cell overrides tx_range, v_max, and static_count; seeds are derived.
  SimConfig base;

  void validate() const;
};

struct CellKey {
  double tx_range = 0.0;
  double v_max = 0.0;
  std::uint32_t static_count = 0;

  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellResult {
  CellKey key;
  std::vector<RunResult> max_stability;  // indexed by profile
  std::vector<RunResult> mst_dg;
  BatchSummary max_stability_summary;
  BatchSummary mst_dg_summary;
};

// Sweeps the full cross product. Mobility profiles depend only on
// (v_max, static_count, profile index), so cells differing only in tx_range
// share them, matching how the experiment batches are defined. Cells are
// ordered tx-major over the given lists. `threads` > 1 spreads profiles over
// workers; results are identical for any thread count.
std::vector<CellResult> run_grid(const ExperimentGrid& grid, unsigned threads = 1);

// Seed derivations. Both hash in the parameter values themselves (not list
// positions), which is what makes grid results independent of cell order.
std::uint64_t profile_seed(std::uint64_t base_seed, double v_max, std::uint32_t static_count,
                           std::uint32_t profile_index);
std::uint64_t run_seed_for(std::uint64_t base_seed, double tx_range, double v_max,
                           std::uint32_t static_count, std::uint32_t profile_index);

}  // namespace dgsim
