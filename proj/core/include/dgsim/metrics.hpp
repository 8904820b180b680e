#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dgsim/geometry.hpp"
#include "dgsim/mobility.hpp"
#include "dgsim/node_set.hpp"
#include "dgsim/rng.hpp"

namespace dgsim {

enum class Policy { MaxStability, MstDg };

std::string_view policy_name(Policy policy);  // "max-stability" / "mst-dg"
std::optional<Policy> parse_policy(std::string_view name);

// Coverage-loss targets run 0.01, 0.02, ..., 1.00; index k stands for
// fraction (k+1)/100.
inline constexpr std::uint32_t kCoverageTargets = 100;
inline constexpr std::uint32_t kCoverageProbes = 100;

// Everything one simulation run reports. Times are in seconds; round r
// completes at (r+1) * round_period_s. Entries of -1 in coverage_loss_times
// mean the target was never reached before the run ended.
struct RunResult {
  Policy policy = Policy::MaxStability;
  std::uint64_t run_seed = 0;
  std::uint32_t node_count = 0;
  double round_period_s = 0.25;

  std::vector<double> failure_times;       // time of the x-th failure at index x-1
  std::optional<double> node_lifetime_s;   // first failure, when any
  std::optional<double> network_lifetime_s;
  std::vector<double> coverage_loss_times;  // kCoverageTargets entries
  std::uint32_t discovery_count = 0;
  std::uint32_t rounds_completed = 0;  // rounds that gathered data
  std::uint32_t no_tree_rounds = 0;    // rounds skipped for lack of a tree
  std::uint32_t rounds_elapsed = 0;
  std::vector<NodeId> leader_sequence;  // one entry per tree built

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

// True exactly when the live-node graph is disconnected although the graph
// over all nodes (dead ones included) would still be connected at these
// positions. This is the run's stop condition.
bool network_lifetime_check(const NodeSet& live, const NodeSet& all_nodes,
                            std::span<const Point> positions, double tx_range);

// 100 uniform probe points drawn with the coverage stream (x before y, like
// every placement draw).
std::vector<Point> sample_probes(SplitMix64& rng, const FieldConfig& field,
                                 std::uint32_t count = kCoverageProbes);

// Share of probe points not within sensing_range of any live node.
double uncovered_fraction(std::span<const Point> probes, std::span<const Point> positions,
                          const NodeSet& live, double sensing_range);

// Convenience composition: sample fresh probes, then evaluate them.
double coverage_fraction(std::span<const Point> positions, const NodeSet& live,
                         double sensing_range, SplitMix64& rng, const FieldConfig& field);

// First-hit tracker over the coverage targets: each round's loss fraction
// records the time for every not-yet-hit target it reaches; recorded times
// are never overwritten.
class CoverageLossTracker {
 public:
  CoverageLossTracker() : times_(kCoverageTargets, -1.0) {}

  void update(double loss_fraction, double time_s);
  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_;
  std::uint32_t next_ = 0;
};

// Per-cell aggregate over the profile batch. Mean fields are -1 when no
// profile defined the quantity; indexed vectors follow the RunResult
// conventions (x-th failure at index x-1, coverage target (k+1)/100 at k).
struct BatchSummary {
  Policy policy = Policy::MaxStability;
  std::uint32_t profile_count = 0;

  std::uint32_t node_lifetime_count = 0;
  double mean_node_lifetime_s = -1.0;
  std::uint32_t network_lifetime_count = 0;
  double mean_network_lifetime_s = -1.0;
  double mean_discovery_count = 0.0;
  double mean_rounds_completed = 0.0;

  std::vector<double> mean_failure_time_s;        // sized to the deepest failure seen
  std::vector<double> failure_count_probability;  // share of profiles with >= x failures
  std::vector<double> mean_coverage_loss_time_s;  // kCoverageTargets entries, -1 = never
  std::vector<double> coverage_loss_probability;  // share of profiles hitting the target

  friend bool operator==(const BatchSummary&, const BatchSummary&) = default;
};

// Folds one batch of runs (all from the same policy). Means are taken over
// the profiles where the quantity is defined; probabilities are plain ratios
// of defining profiles to all profiles. Throws ConfigError on an empty or
// mixed-policy batch.
BatchSummary aggregate_batch(std::span<const RunResult> results);

}  // namespace dgsim
