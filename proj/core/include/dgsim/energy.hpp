#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dgsim/geometry.hpp"
#include "dgsim/node_set.hpp"
#include "dgsim/topology.hpp"

namespace dgsim {

// First-order radio constants. Transmitting k bits over d meters costs
// e_elec*k + eps_amp*k*d^2; receiving k bits costs e_elec*k.
struct EnergyConfig {
  double e_elec = 50e-9;        // J/bit
  double eps_amp = 100e-12;     // J/bit/m^2
  double initial_energy = 2.0;  // J per node
  std::uint32_t data_packet_bits = 2000;
  std::uint32_t control_packet_bits = 400;

  // Throws ConfigError unless every field is strictly positive.
  void validate() const;
};

double tx_energy(const EnergyConfig& cfg, std::uint32_t bits, double distance_m);
double rx_energy(const EnergyConfig& cfg, std::uint32_t bits);

// Per-node residual energies and failure bookkeeping for one run. A node is
// live iff its residual is strictly positive; once it fails its residual is
// clamped to zero, its failure time is set, and later charges are ignored.
class EnergyLedger {
 public:
  EnergyLedger(double initial_energy, NodeId node_count);

  NodeId node_count() const { return static_cast<NodeId>(residual_.size()); }
  const NodeSet& live() const { return live_; }
  double residual(NodeId id) const { return residual_[id]; }
  std::optional<double> failure_time(NodeId id) const;

  // Deducts joules from a live node's residual; no-op for failed nodes. The
  // balance may go negative mid-round (a node always finishes the round it
  // started).
  void charge(NodeId id, double joules);

  // Fails every live node whose residual has reached <= 0: clamps the
  // balance, records time_s, removes it from the live set. Returns the newly
  // failed ids in ascending order. Charge operations call this once after
  // applying all of their charges.
  std::vector<NodeId> collect_failures(double time_s);

 private:
  std::vector<double> residual_;
  std::vector<double> failure_time_;  // negative = still alive
  NodeSet live_;
};

// One gathering round over the tree at the given positions: every non-leader
// transmits one data packet to its parent at the current distance, every
// node receives one data packet per child, and the leader transmits the
// aggregate to the sink. Charges all tree members, then returns the nodes
// that failed (recorded at time_s).
std::vector<NodeId> charge_gathering_round(EnergyLedger& ledger, const EnergyConfig& cfg,
                                           const RootedTree& tree,
                                           std::span<const Point> positions, Point sink,
                                           double time_s);

// Network-wide discovery flood: every live node broadcasts one control
// packet at full transmission range and receives one from each live
// neighbor. `snapshot` must be the current round's graph over the ledger's
// live set. Returns the nodes that failed (recorded at time_s).
std::vector<NodeId> charge_discovery(EnergyLedger& ledger, const EnergyConfig& cfg,
                                     const StaticGraph& snapshot, double time_s);

// Convenience overload that builds the snapshot itself.
std::vector<NodeId> charge_discovery(EnergyLedger& ledger, const EnergyConfig& cfg,
                                     std::span<const Point> positions, const NodeSet& live,
                                     double tx_range, double time_s);

}  // namespace dgsim
