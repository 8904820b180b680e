#include "dgsim/metrics.hpp"

#include <algorithm>

#include "dgsim/errors.hpp"
#include "dgsim/topology.hpp"

namespace dgsim {

std::string_view policy_name(Policy policy) {
  switch (policy) {
    case Policy::MaxStability:
      return "max-stability";
    case Policy::MstDg:
      return "mst-dg";
  }
  return "unknown";
}

std::optional<Policy> parse_policy(std::string_view name) {
  if (name == "max-stability") return Policy::MaxStability;
  if (name == "mst-dg") return Policy::MstDg;
  return std::nullopt;
}

bool network_lifetime_check(const NodeSet& live, const NodeSet& all_nodes,
                            std::span<const Point> positions, double tx_range) {
  if (is_connected(positions, live, tx_range)) return false;
  return is_connected(positions, all_nodes, tx_range);
}

std::vector<Point> sample_probes(SplitMix64& rng, const FieldConfig& field, std::uint32_t count) {
  std::vector<Point> probes;
  probes.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const double x = rng.next_double() * field.width;
    const double y = rng.next_double() * field.height;
    probes.push_back({x, y});
  }
  return probes;
}

double uncovered_fraction(std::span<const Point> probes, std::span<const Point> positions,
                          const NodeSet& live, double sensing_range) {
  if (probes.empty()) return 0.0;

  std::vector<NodeId> members;
  members.reserve(live.count());
  live.for_each([&](NodeId id) { members.push_back(id); });

  const double sensing_sq = sensing_range * sensing_range;
  std::uint32_t uncovered = 0;
  for (const Point probe : probes) {
    bool covered = false;
    for (const NodeId id : members) {
      if (squared_distance(probe, positions[id]) <= sensing_sq) {
        covered = true;
        break;
      }
    }
    if (!covered) ++uncovered;
  }
  return static_cast<double>(uncovered) / static_cast<double>(probes.size());
}

double coverage_fraction(std::span<const Point> positions, const NodeSet& live,
                         double sensing_range, SplitMix64& rng, const FieldConfig& field) {
  const std::vector<Point> probes = sample_probes(rng, field, kCoverageProbes);
  return uncovered_fraction(probes, positions, live, sensing_range);
}

void CoverageLossTracker::update(double loss_fraction, double time_s) {
  // The tolerance absorbs decimal round-off: fractions arrive as counts/100.
  while (next_ < kCoverageTargets &&
         loss_fraction >= static_cast<double>(next_ + 1) * 0.01 - 1e-9) {
    times_[next_] = time_s;
    ++next_;
  }
}

BatchSummary aggregate_batch(std::span<const RunResult> results) {
  if (results.empty()) throw ConfigError("aggregate_batch: empty batch");

  BatchSummary s;
  s.policy = results.front().policy;
  s.profile_count = static_cast<std::uint32_t>(results.size());

  std::size_t deepest = 0;
  for (const auto& r : results) {
    if (r.policy != s.policy) throw ConfigError("aggregate_batch: mixed policies in one batch");
    deepest = std::max(deepest, r.failure_times.size());
  }

  double node_sum = 0.0;
  double network_sum = 0.0;
  double discovery_sum = 0.0;
  double rounds_sum = 0.0;
  std::vector<double> failure_sum(deepest, 0.0);
  std::vector<std::uint32_t> failure_n(deepest, 0);
  std::vector<double> coverage_sum(kCoverageTargets, 0.0);
  std::vector<std::uint32_t> coverage_n(kCoverageTargets, 0);

  for (const auto& r : results) {
    if (r.node_lifetime_s) {
      node_sum += *r.node_lifetime_s;
      ++s.node_lifetime_count;
    }
    if (r.network_lifetime_s) {
      network_sum += *r.network_lifetime_s;
      ++s.network_lifetime_count;
    }
    discovery_sum += r.discovery_count;
    rounds_sum += r.rounds_completed;
    for (std::size_t x = 0; x < r.failure_times.size(); ++x) {
      failure_sum[x] += r.failure_times[x];
      ++failure_n[x];
    }
    for (std::uint32_t k = 0; k < kCoverageTargets; ++k) {
      const double t = r.coverage_loss_times[k];
      if (t >= 0.0) {
        coverage_sum[k] += t;
        ++coverage_n[k];
      }
    }
  }

  const double total = static_cast<double>(s.profile_count);
  if (s.node_lifetime_count > 0) s.mean_node_lifetime_s = node_sum / s.node_lifetime_count;
  if (s.network_lifetime_count > 0) {
    s.mean_network_lifetime_s = network_sum / s.network_lifetime_count;
  }
  s.mean_discovery_count = discovery_sum / total;
  s.mean_rounds_completed = rounds_sum / total;

  s.mean_failure_time_s.resize(deepest);
  s.failure_count_probability.resize(deepest);
  for (std::size_t x = 0; x < deepest; ++x) {
    s.mean_failure_time_s[x] = failure_sum[x] / failure_n[x];  // n >= 1 by construction
    s.failure_count_probability[x] = failure_n[x] / total;
  }

  s.mean_coverage_loss_time_s.assign(kCoverageTargets, -1.0);
  s.coverage_loss_probability.assign(kCoverageTargets, 0.0);
  for (std::uint32_t k = 0; k < kCoverageTargets; ++k) {
    if (coverage_n[k] > 0) s.mean_coverage_loss_time_s[k] = coverage_sum[k] / coverage_n[k];
    s.coverage_loss_probability[k] = coverage_n[k] / total;
  }
  return s;
}

}  // namespace dgsim
