#include "dgsim/gatherers.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace dgsim {

namespace {

void append(std::vector<NodeId>& into, std::vector<NodeId>&& more) {
  into.insert(into.end(), more.begin(), more.end());
}

}  // namespace

std::optional<Epoch> max_stability_find_epoch(const MobilityProfile& profile, const NodeSet& live,
                                              double tx_range, Round start, Round last_round) {
  if (start > last_round || last_round >= profile.horizon_rounds()) {
    throw std::invalid_argument("max_stability_find_epoch: window outside the profile horizon");
  }
  if (live.empty()) return std::nullopt;

  const StaticGraph start_graph = StaticGraph::build(profile.row(start), live, tx_range, start);
  if (!start_graph.connected()) return std::nullopt;

  MobileGraph window = MobileGraph::from_static(start_graph);
  if (live.is_subset_of(profile.static_set())) {
    window = window.replicate_window(last_round - start);
  } else {
    const NodeId needed_edges = live.count() - 1;
    for (Round j = start + 1; j <= last_round; ++j) {
      const StaticGraph next = StaticGraph::build(profile.row(j), live, tx_range, j);
      MobileGraph candidate = intersect_extend(window, next);
      if (candidate.edge_count() < needed_edges || !candidate.connected()) break;
      window = std::move(candidate);
    }
  }

  auto tree = prim_mst(window);
  // The window is connected by construction, so a tree always exists.
  return Epoch{window.start_round(), window.end_round(), std::move(*tree)};
}

bool tree_valid(const RootedTree& tree, std::span<const Point> positions, const NodeSet& live,
                double tx_range) {
  if (!tree.nodes.is_subset_of(live)) return false;
  const double range_sq = tx_range * tx_range;
  bool ok = true;
  tree.nodes.for_each([&](NodeId id) {
    const std::int32_t parent = tree.parent[id];
    if (parent < 0) return;
    if (squared_distance(positions[id], positions[static_cast<NodeId>(parent)]) > range_sq) {
      ok = false;
    }
  });
  return ok;
}

NodeId Gatherer::pick_leader(const NodeSet& nodes) {
  const NodeId index = static_cast<NodeId>(leader_rng_.next_below(nodes.count()));
  return nodes.nth(index);
}

void Gatherer::adopt(const SpanningTree& tree, Round built_at) {
  const NodeId leader = pick_leader(tree.nodes);
  tree_ = bfs_root(tree, leader);
  has_tree_ = true;
  ++discovery_count_;
  leaders_.push_back(leader);
  if (trace_) {
    open_record_ = TreeRecord{built_at, built_at, leader, tree.edges};
    record_open_ = true;
  }
}

void Gatherer::emit_record(Round effective_end) {
  if (!record_open_) return;
  open_record_.end = effective_end;
  trace_(open_record_);
  record_open_ = false;
}

MaxStabilityGatherer::MaxStabilityGatherer(const MobilityProfile& profile, double tx_range,
                                           Round horizon_rounds, std::uint64_t leader_seed)
    : Gatherer(profile, tx_range, leader_seed), last_round_(horizon_rounds - 1) {
  if (horizon_rounds == 0 || horizon_rounds > profile.horizon_rounds()) {
    throw std::invalid_argument("horizon does not fit the profile");
  }
}

bool MaxStabilityGatherer::prepare_round(Round r, const EnergyConfig& cfg, EnergyLedger& ledger,
                                         double time_s, std::vector<NodeId>& failures) {
  if (has_tree_ && r <= epoch_end_ &&
      tree_valid(tree_, profile_.row(r), ledger.live(), tx_range_)) {
    return true;
  }
  return replan(r, cfg, ledger, time_s, failures);
}

bool MaxStabilityGatherer::replan(Round r, const EnergyConfig& cfg, EnergyLedger& ledger,
                                  double time_s, std::vector<NodeId>& failures) {
  // Close the current window first: it ends at its planned end, or at r-1
  // when a failure at r cut it short. An end of start-1 marks a window that
  // never completed a round.
  if (record_open_) emit_record(std::min(epoch_end_, r > 0 ? r - 1 : 0));
  has_tree_ = false;

  auto epoch = max_stability_find_epoch(profile_, ledger.live(), tx_range_, r, last_round_);
  if (!epoch) return false;

  epoch_start_ = epoch->start;
  epoch_end_ = epoch->end;
  adopt(epoch->tree, r);

  const StaticGraph snapshot = StaticGraph::build(profile_.row(r), ledger.live(), tx_range_, r);
  append(failures, charge_discovery(ledger, cfg, snapshot, time_s));
  return true;
}

void MaxStabilityGatherer::on_failures(Round r, const EnergyConfig& cfg, EnergyLedger& ledger,
                                       double time_s, std::vector<NodeId>& failures) {
  if (!has_tree_) return;
  replan(r, cfg, ledger, time_s, failures);
}

void MaxStabilityGatherer::finish(Round last_simulated_round) {
  emit_record(std::min(epoch_end_, last_simulated_round));
}

MstDgGatherer::MstDgGatherer(const MobilityProfile& profile, double tx_range,
                             std::uint64_t leader_seed)
    : Gatherer(profile, tx_range, leader_seed) {}

bool MstDgGatherer::prepare_round(Round r, const EnergyConfig& cfg, EnergyLedger& ledger,
                                  double time_s, std::vector<NodeId>& failures) {
  if (has_tree_ && tree_valid(tree_, profile_.row(r), ledger.live(), tx_range_)) {
    last_served_ = r;
    return true;
  }
  if (record_open_) emit_record(last_served_);
  has_tree_ = false;

  if (ledger.live().empty()) return false;
  const StaticGraph snapshot = StaticGraph::build(profile_.row(r), ledger.live(), tx_range_, r);
  auto tree = prim_mst(snapshot);
  if (!tree) return false;

  adopt(*tree, r);
  last_served_ = r;
  append(failures, charge_discovery(ledger, cfg, snapshot, time_s));
  return true;
}

void MstDgGatherer::on_failures(Round, const EnergyConfig&, EnergyLedger&, double,
                                std::vector<NodeId>&) {
  // The validity check at the next round's start picks up the break; the
  // baseline never replans mid-round.
}

void MstDgGatherer::finish(Round) {
  emit_record(last_served_);
}

}  // namespace dgsim
