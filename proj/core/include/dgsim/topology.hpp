#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dgsim/geometry.hpp"
#include "dgsim/node_set.hpp"

namespace dgsim {

struct WeightedEdge {
  NodeId u = 0;  // u < v always
  NodeId v = 0;
  double weight = 0.0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

// Unit-disk communication graph over the live nodes at one instant. An edge
// exists iff the Euclidean distance is <= tx_range (inclusive boundary) and
// its weight is that distance.
class StaticGraph {
 public:
  // `positions` covers the whole universe, indexed by node id; only members
  // of `live` contribute vertices. `live` must fit the positions span.
  static StaticGraph build(std::span<const Point> positions, const NodeSet& live,
                           double tx_range, Round round);

  Round round() const { return round_; }
  double tx_range() const { return tx_range_; }
  const NodeSet& live() const { return live_; }
  std::uint32_t universe() const { return universe_; }

  std::span<const WeightedEdge> edges() const { return edges_; }
  bool has_edge(NodeId u, NodeId v) const;
  // Distance weight of an existing edge; throws std::out_of_range otherwise.
  double weight(NodeId u, NodeId v) const;

  // Live neighbors of u as a bit row (the adjacency matrix row).
  std::span<const std::uint64_t> neighbor_row(NodeId u) const;
  std::uint32_t neighbor_count(NodeId u) const;

  bool connected() const;

 private:
  StaticGraph() = default;

  Round round_ = 0;
  double tx_range_ = 0.0;
  std::uint32_t universe_ = 0;
  std::uint32_t row_words_ = 0;
  NodeSet live_;
  std::vector<std::uint64_t> adjacency_;  // universe rows of row_words_ each
  std::vector<WeightedEdge> edges_;       // sorted by (u, v)
};

// Intersection graph over a contiguous window of rounds: an edge survives iff
// it was present in every round of the window, and its weight is the
// geometric mean of the per-round distances. Means are kept as running log
// sums, so reading a weight costs one exp; expect agreement with a direct
// product only to ~1e-9 relative.
class MobileGraph {
 public:
  static MobileGraph from_static(const StaticGraph& g);

  Round start_round() const { return start_; }
  Round end_round() const { return end_; }
  std::uint32_t window_length() const { return end_ - start_ + 1; }
  const NodeSet& live() const { return live_; }
  std::uint32_t universe() const { return universe_; }

  struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    double log_sum = 0.0;  // sum over the window of log(distance)
  };

  std::span<const Edge> edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  // Widens a single-round window by `extra` rounds of an identical snapshot,
  // scaling each log sum accordingly. Only valid when window_length() == 1
  // (throws std::logic_error otherwise); callers use it when every live node
  // is stationary, where all future snapshots equal the current one.
  MobileGraph replicate_window(Round extra) const;
  bool has_edge(NodeId u, NodeId v) const;
  double weight(NodeId u, NodeId v) const;  // throws std::out_of_range if absent
  double weight_of(const Edge& e) const;

  bool connected() const;

 private:
  MobileGraph() = default;
  friend MobileGraph intersect_extend(const MobileGraph&, const StaticGraph&);

  Round start_ = 0;
  Round end_ = 0;
  std::uint32_t universe_ = 0;
  NodeSet live_;
  std::vector<Edge> edges_;  // sorted by (u, v)
};

// Extends the window by one round: keeps exactly the edges present both in
// `g` and in `next`, accumulating log weights. `next.round()` must equal
// `g.end_round() + 1` and cover the same live set; throws
// std::invalid_argument otherwise. Connectivity of the result is
// non-increasing as the window grows.
MobileGraph intersect_extend(const MobileGraph& g, const StaticGraph& next);

struct SpanningTree {
  NodeSet nodes;
  std::vector<WeightedEdge> edges;  // sorted by (u, v)
  double total_weight = 0.0;
};

// Minimum spanning tree, or nullopt when the graph is disconnected. Ties are
// broken by comparing (weight, min endpoint, max endpoint) lexicographically,
// which makes the result independent of edge enumeration order.
std::optional<SpanningTree> prim_mst(const StaticGraph& g);
std::optional<SpanningTree> prim_mst(const MobileGraph& g);

struct RootedTree {
  NodeId root = 0;
  NodeSet nodes;
  // Indexed by node id; -1 for the root and for nodes outside the tree.
  std::vector<std::int32_t> parent;
  std::vector<std::vector<NodeId>> children;  // each list in ascending id order
  std::vector<std::int32_t> depth;            // -1 outside the tree

  std::uint32_t child_count(NodeId id) const { return static_cast<std::uint32_t>(children[id].size()); }
};

// Roots the tree by breadth-first traversal from `root`, visiting neighbors
// in ascending id order. Throws std::invalid_argument if root is not a tree
// node.
RootedTree bfs_root(const SpanningTree& tree, NodeId root);

// Connectivity of the unit-disk graph induced by `nodes` at the given
// positions, without materializing the graph. Empty and singleton sets count
// as connected.
bool is_connected(std::span<const Point> positions, const NodeSet& nodes, double tx_range);

// Plain-text edge list dumps for debugging. Format: one header line
// "# graph <kind> rounds=<a>..<b> nodes=<k> edges=<m>", then "u v weight"
// per line, sorted by (u, v).
void dump_edges(std::ostream& out, const StaticGraph& g);
void dump_edges(std::ostream& out, const MobileGraph& g);

}  // namespace dgsim
