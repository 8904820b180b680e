#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dgsim/energy.hpp"
#include "dgsim/mobility.hpp"
#include "dgsim/node_set.hpp"
#include "dgsim/rng.hpp"
#include "dgsim/topology.hpp"

namespace dgsim {

// One planning window of the look-ahead policy: the tree is guaranteed
// usable for every round in [start, end].
struct Epoch {
  Round start = 0;
  Round end = 0;  // inclusive
  SpanningTree tree;
};

// Longest window [start, j] with j <= last_round whose per-round intersection
// graph over `live` stays connected, together with the minimum spanning tree
// of that intersection graph. Grows the window one round at a time and stops
// just before connectivity would be lost. Returns nullopt when already the
// start round's snapshot is disconnected.
//
// When every live node is stationary the window trivially extends to
// last_round; that case is short-circuited without scanning.
std::optional<Epoch> max_stability_find_epoch(const MobilityProfile& profile, const NodeSet& live,
                                              double tx_range, Round start, Round last_round);

// A tree stays usable while every member is live and every parent-child pair
// is within transmission range at the current positions.
bool tree_valid(const RootedTree& tree, std::span<const Point> positions, const NodeSet& live,
                double tx_range);

// Trace record emitted when a tree's service window closes. For the
// look-ahead policy `end` follows the planning bookkeeping: the planned
// window end, or k-1 when a failure at round k cut the window short. For the
// baseline `end` is the last round the tree actually served.
struct TreeRecord {
  Round start = 0;
  Round end = 0;
  NodeId leader = 0;
  std::vector<WeightedEdge> edges;
};

using TreeTraceSink = std::function<void(const TreeRecord&)>;

// Round-by-round tree supplier driven by the engine. Implementations own the
// current tree, decide when to rebuild, and charge the discovery flood for
// every successful build.
class Gatherer {
 public:
  virtual ~Gatherer() = default;

  // Makes a tree available for round r, rebuilding if the current one is
  // invalid or absent. A rebuild charges one discovery flood at round r's
  // positions; nodes failing under that charge are appended to `failures`
  // (recorded at time_s). Returns false when no tree exists this round, in
  // which case nothing was charged.
  virtual bool prepare_round(Round r, const EnergyConfig& cfg, EnergyLedger& ledger,
                             double time_s, std::vector<NodeId>& failures) = 0;

  // Called after round r's gathering produced failures. The look-ahead
  // policy truncates its window to r-1 and replans immediately from r over
  // the reduced live set (one more flood, charged at round r); the baseline
  // just drops the broken tree and rebuilds on the next prepare_round.
  virtual void on_failures(Round r, const EnergyConfig& cfg, EnergyLedger& ledger, double time_s,
                           std::vector<NodeId>& failures) = 0;

  // Closes the open trace record, if any. Call once after the final round.
  virtual void finish(Round last_simulated_round) = 0;

  bool has_tree() const { return has_tree_; }
  const RootedTree& tree() const { return tree_; }
  NodeId leader() const { return tree_.root; }
  std::uint32_t discovery_count() const { return discovery_count_; }
  std::span<const NodeId> leader_sequence() const { return leaders_; }

  void set_trace(TreeTraceSink sink) { trace_ = std::move(sink); }

 protected:
  Gatherer(const MobilityProfile& profile, double tx_range, std::uint64_t leader_seed)
      : profile_(profile), tx_range_(tx_range), leader_rng_(leader_seed) {}

  // Uniform leader choice over the tree's node set using the leader stream.
  NodeId pick_leader(const NodeSet& nodes);
  void adopt(const SpanningTree& tree, Round built_at);
  void emit_record(Round effective_end);

  const MobilityProfile& profile_;
  double tx_range_;
  SplitMix64 leader_rng_;
  RootedTree tree_;
  bool has_tree_ = false;
  std::uint32_t discovery_count_ = 0;
  std::vector<NodeId> leaders_;
  TreeTraceSink trace_;
  TreeRecord open_record_;
  bool record_open_ = false;
};

// Look-ahead policy: plans a maximal stability window over the precomputed
// horizon and keeps one tree for the whole window. Omniscience is read
// access to the profile's future rows; future failures are handled
// reactively via on_failures.
class MaxStabilityGatherer final : public Gatherer {
 public:
  // Rounds at and beyond `horizon_rounds` are never planned for.
  MaxStabilityGatherer(const MobilityProfile& profile, double tx_range, Round horizon_rounds,
                       std::uint64_t leader_seed);

  bool prepare_round(Round r, const EnergyConfig& cfg, EnergyLedger& ledger, double time_s,
                     std::vector<NodeId>& failures) override;
  void on_failures(Round r, const EnergyConfig& cfg, EnergyLedger& ledger, double time_s,
                   std::vector<NodeId>& failures) override;
  void finish(Round last_simulated_round) override;

  Round epoch_start() const { return epoch_start_; }
  Round epoch_end() const { return epoch_end_; }

 private:
  // Plans a window starting at r and installs its tree; charges the flood on
  // success. Returns whether a tree was installed.
  bool replan(Round r, const EnergyConfig& cfg, EnergyLedger& ledger, double time_s,
              std::vector<NodeId>& failures);

  Round last_round_;
  Round epoch_start_ = 0;
  Round epoch_end_ = 0;
};

// Baseline policy: Prim tree on the current snapshot, kept until it breaks
// through mobility or a failure.
class MstDgGatherer final : public Gatherer {
 public:
  MstDgGatherer(const MobilityProfile& profile, double tx_range, std::uint64_t leader_seed);

  bool prepare_round(Round r, const EnergyConfig& cfg, EnergyLedger& ledger, double time_s,
                     std::vector<NodeId>& failures) override;
  void on_failures(Round r, const EnergyConfig& cfg, EnergyLedger& ledger, double time_s,
                   std::vector<NodeId>& failures) override;
  void finish(Round last_simulated_round) override;

 private:
  Round last_served_ = 0;
};

}  // namespace dgsim
