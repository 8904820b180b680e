#include "dgsim/topology.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dgsim/format.hpp"

namespace dgsim {

namespace {

constexpr std::uint32_t row_word_count(std::uint32_t universe) {
  return (universe + 63) / 64;
}

// Depth-first reachability over bit-matrix adjacency rows. Rows only ever
// hold live nodes, so no masking against the live set is needed.
bool bits_connected(const std::vector<std::uint64_t>& adjacency, std::uint32_t row_words,
                    const NodeSet& live) {
  const NodeId total = live.count();
  if (total <= 1) return true;

  std::vector<std::uint64_t> visited(row_words, 0);
  std::vector<NodeId> stack;
  stack.reserve(total);

  const NodeId first = live.nth(0);
  visited[first >> 6] |= std::uint64_t{1} << (first & 63);
  stack.push_back(first);
  NodeId seen = 1;

  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    const std::uint64_t* row = adjacency.data() + static_cast<std::size_t>(u) * row_words;
    for (std::uint32_t w = 0; w < row_words; ++w) {
      std::uint64_t bits = row[w] & ~visited[w];
      visited[w] |= bits;
      while (bits != 0) {
        const int bit = std::countr_zero(bits);
        bits &= bits - 1;
        stack.push_back(static_cast<NodeId>(w * 64 + bit));
        ++seen;
      }
    }
  }
  return seen == total;
}

void set_pair(std::vector<std::uint64_t>& adjacency, std::uint32_t row_words, NodeId u, NodeId v) {
  adjacency[static_cast<std::size_t>(u) * row_words + (v >> 6)] |= std::uint64_t{1} << (v & 63);
  adjacency[static_cast<std::size_t>(v) * row_words + (u >> 6)] |= std::uint64_t{1} << (u & 63);
}

bool test_pair(const std::vector<std::uint64_t>& adjacency, std::uint32_t row_words, NodeId u,
               NodeId v) {
  return (adjacency[static_cast<std::size_t>(u) * row_words + (v >> 6)] >> (v & 63)) & 1u;
}

}  // namespace

StaticGraph StaticGraph::build(std::span<const Point> positions, const NodeSet& live,
                               double tx_range, Round round) {
  if (live.universe() > positions.size()) {
    throw std::invalid_argument("live set universe exceeds positions span");
  }
  StaticGraph g;
  g.round_ = round;
  g.tx_range_ = tx_range;
  g.universe_ = live.universe();
  g.row_words_ = row_word_count(g.universe_);
  g.live_ = live;
  g.adjacency_.assign(static_cast<std::size_t>(g.universe_) * g.row_words_, 0);

  std::vector<NodeId> members;
  members.reserve(live.count());
  live.for_each([&](NodeId id) { members.push_back(id); });

  const double range_sq = tx_range * tx_range;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const NodeId u = members[i];
    const Point pu = positions[u];
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const NodeId v = members[j];
      const double sq = squared_distance(pu, positions[v]);
      if (sq <= range_sq) {
        set_pair(g.adjacency_, g.row_words_, u, v);
        g.edges_.push_back({u, v, std::sqrt(sq)});
      }
    }
  }
  return g;
}

bool StaticGraph::has_edge(NodeId u, NodeId v) const {
  if (u >= universe_ || v >= universe_ || u == v) return false;
  return test_pair(adjacency_, row_words_, u, v);
}

double StaticGraph::weight(NodeId u, NodeId v) const {
  if (u > v) std::swap(u, v);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{u, v},
                                   [](const WeightedEdge& e, const std::pair<NodeId, NodeId>& key) {
                                     return std::pair{e.u, e.v} < key;
                                   });
  if (it == edges_.end() || it->u != u || it->v != v) {
    throw std::out_of_range("no such edge");
  }
  return it->weight;
}

std::span<const std::uint64_t> StaticGraph::neighbor_row(NodeId u) const {
  return {adjacency_.data() + static_cast<std::size_t>(u) * row_words_, row_words_};
}

std::uint32_t StaticGraph::neighbor_count(NodeId u) const {
  std::uint32_t n = 0;
  for (const auto w : neighbor_row(u)) n += static_cast<std::uint32_t>(std::popcount(w));
  return n;
}

bool StaticGraph::connected() const {
  return bits_connected(adjacency_, row_words_, live_);
}

MobileGraph MobileGraph::from_static(const StaticGraph& g) {
  MobileGraph m;
  m.start_ = g.round();
  m.end_ = g.round();
  m.universe_ = g.universe();
  m.live_ = g.live();
  m.edges_.reserve(g.edges().size());
  for (const auto& e : g.edges()) {
    m.edges_.push_back({e.u, e.v, std::log(e.weight)});
  }
  return m;
}

bool MobileGraph::has_edge(NodeId u, NodeId v) const {
  if (u > v) std::swap(u, v);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{u, v},
                                   [](const Edge& e, const std::pair<NodeId, NodeId>& key) {
                                     return std::pair{e.u, e.v} < key;
                                   });
  return it != edges_.end() && it->u == u && it->v == v;
}

double MobileGraph::weight(NodeId u, NodeId v) const {
  if (u > v) std::swap(u, v);
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{u, v},
                                   [](const Edge& e, const std::pair<NodeId, NodeId>& key) {
                                     return std::pair{e.u, e.v} < key;
                                   });
  if (it == edges_.end() || it->u != u || it->v != v) {
    throw std::out_of_range("no such edge");
  }
  return weight_of(*it);
}

double MobileGraph::weight_of(const Edge& e) const {
  return std::exp(e.log_sum / static_cast<double>(window_length()));
}

MobileGraph MobileGraph::replicate_window(Round extra) const {
  if (window_length() != 1) {
    throw std::logic_error("replicate_window requires a single-round window");
  }
  MobileGraph out = *this;
  out.end_ = start_ + extra;
  const double factor = static_cast<double>(extra) + 1.0;
  for (auto& e : out.edges_) e.log_sum *= factor;
  return out;
}

bool MobileGraph::connected() const {
  const std::uint32_t row_words = row_word_count(universe_);
  std::vector<std::uint64_t> adjacency(static_cast<std::size_t>(universe_) * row_words, 0);
  for (const auto& e : edges_) set_pair(adjacency, row_words, e.u, e.v);
  return bits_connected(adjacency, row_words, live_);
}

MobileGraph intersect_extend(const MobileGraph& g, const StaticGraph& next) {
  if (next.round() != g.end_round() + 1) {
    throw std::invalid_argument("intersect_extend: snapshot round is not window end + 1");
  }
  if (next.universe() != g.universe() || !(next.live() == g.live())) {
    throw std::invalid_argument("intersect_extend: snapshot live set differs from window");
  }

  MobileGraph out;
  out.start_ = g.start_;
  out.end_ = next.round();
  out.universe_ = g.universe_;
  out.live_ = g.live_;
  out.edges_.reserve(g.edges_.size());

  // Both edge lists are sorted by (u, v); merge-intersect them.
  auto it = next.edges().begin();
  const auto end = next.edges().end();
  for (const auto& e : g.edges_) {
    const std::pair key{e.u, e.v};
    while (it != end && std::pair{it->u, it->v} < key) ++it;
    if (it == end) break;
    if (std::pair{it->u, it->v} == key) {
      out.edges_.push_back({e.u, e.v, e.log_sum + std::log(it->weight)});
    }
  }
  return out;
}

namespace {

// Prim over an explicit edge list. Candidate edges compare by
// (weight, min endpoint, max endpoint), so the tree is unique for any edge
// enumeration order even with tied weights.
std::optional<SpanningTree> prim_impl(std::uint32_t universe, const NodeSet& live,
                                      const std::vector<WeightedEdge>& edges) {
  const NodeId total = live.count();
  SpanningTree tree;
  tree.nodes = live;
  if (total <= 1) return tree;

  std::vector<std::vector<std::pair<NodeId, double>>> adj(universe);
  for (const auto& e : edges) {
    adj[e.u].emplace_back(e.v, e.weight);
    adj[e.v].emplace_back(e.u, e.weight);
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> key(universe, kInf);
  std::vector<NodeId> via(universe, 0);
  std::vector<char> in_tree(universe, 0);
  std::vector<NodeId> members;
  members.reserve(total);
  live.for_each([&](NodeId id) { members.push_back(id); });

  auto candidate = [&](NodeId v) {
    const NodeId a = std::min(via[v], v);
    const NodeId b = std::max(via[v], v);
    return std::tuple{key[v], a, b};
  };

  auto absorb = [&](NodeId u) {
    in_tree[u] = 1;
    for (const auto& [v, w] : adj[u]) {
      if (in_tree[v]) continue;
      const NodeId a = std::min(u, v);
      const NodeId b = std::max(u, v);
      if (std::tuple{w, a, b} < candidate(v)) {
        key[v] = w;
        via[v] = u;
      }
    }
  };

  absorb(members.front());
  tree.edges.reserve(total - 1);
  for (NodeId picked = 1; picked < total; ++picked) {
    NodeId best = universe;
    for (const NodeId v : members) {
      if (in_tree[v] || key[v] == kInf) continue;
      if (best == universe || candidate(v) < candidate(best)) best = v;
    }
    if (best == universe) return std::nullopt;  // disconnected
    tree.edges.push_back({std::min(via[best], best), std::max(via[best], best), key[best]});
    tree.total_weight += key[best];
    absorb(best);
  }

  std::sort(tree.edges.begin(), tree.edges.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return std::pair{a.u, a.v} < std::pair{b.u, b.v};
  });
  return tree;
}

}  // namespace

std::optional<SpanningTree> prim_mst(const StaticGraph& g) {
  std::vector<WeightedEdge> edges(g.edges().begin(), g.edges().end());
  return prim_impl(g.universe(), g.live(), edges);
}

std::optional<SpanningTree> prim_mst(const MobileGraph& g) {
  std::vector<WeightedEdge> edges;
  edges.reserve(g.edge_count());
  for (const auto& e : g.edges()) {
    edges.push_back({e.u, e.v, g.weight_of(e)});
  }
  return prim_impl(g.universe(), g.live(), edges);
}

RootedTree bfs_root(const SpanningTree& tree, NodeId root) {
  if (root >= tree.nodes.universe() || !tree.nodes.test(root)) {
    throw std::invalid_argument("bfs_root: root is not a tree node");
  }
  const std::uint32_t universe = tree.nodes.universe();

  RootedTree rooted;
  rooted.root = root;
  rooted.nodes = tree.nodes;
  rooted.parent.assign(universe, -1);
  rooted.children.assign(universe, {});
  rooted.depth.assign(universe, -1);

  std::vector<std::vector<NodeId>> adj(universe);
  for (const auto& e : tree.edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());

  std::vector<NodeId> queue;
  queue.reserve(tree.nodes.count());
  queue.push_back(root);
  rooted.depth[root] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    for (const NodeId v : adj[u]) {
      if (rooted.depth[v] >= 0 || v == root) continue;
      rooted.parent[v] = static_cast<std::int32_t>(u);
      rooted.depth[v] = rooted.depth[u] + 1;
      rooted.children[u].push_back(v);
      queue.push_back(v);
    }
  }
  return rooted;
}

bool is_connected(std::span<const Point> positions, const NodeSet& nodes, double tx_range) {
  const NodeId total = nodes.count();
  if (total <= 1) return true;

  std::vector<NodeId> members;
  members.reserve(total);
  nodes.for_each([&](NodeId id) { members.push_back(id); });

  const double range_sq = tx_range * tx_range;
  std::vector<char> visited(members.size(), 0);
  std::vector<std::uint32_t> stack;
  stack.reserve(members.size());
  visited[0] = 1;
  stack.push_back(0);
  NodeId seen = 1;

  while (!stack.empty()) {
    const std::uint32_t i = stack.back();
    stack.pop_back();
    const Point pu = positions[members[i]];
    for (std::uint32_t j = 0; j < members.size(); ++j) {
      if (visited[j]) continue;
      if (squared_distance(pu, positions[members[j]]) <= range_sq) {
        visited[j] = 1;
        stack.push_back(j);
        ++seen;
      }
    }
  }
  return seen == total;
}

void dump_edges(std::ostream& out, const StaticGraph& g) {
  out << "# graph static rounds=" << g.round() << ".." << g.round() << " nodes=" << g.live().count()
      << " edges=" << g.edges().size() << '\n';
  for (const auto& e : g.edges()) {
    out << e.u << ' ' << e.v << ' ' << format_double(e.weight) << '\n';
  }
}

void dump_edges(std::ostream& out, const MobileGraph& g) {
  out << "# graph mobile rounds=" << g.start_round() << ".." << g.end_round()
      << " nodes=" << g.live().count() << " edges=" << g.edge_count() << '\n';
  for (const auto& e : g.edges()) {
    out << e.u << ' ' << e.v << ' ' << format_double(g.weight_of(e)) << '\n';
  }
}

}  // namespace dgsim
