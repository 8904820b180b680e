#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here favors obviousness over speed and shares no code with
// the implementations under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <dgsim/geometry.hpp>
#include <dgsim/mobility.hpp>
#include <dgsim/node_set.hpp>

namespace dgtest {

struct OracleEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double weight = 0.0;
};

// Connectivity by plain DFS over an explicit edge list.
inline bool oracle_connected(const std::vector<std::uint32_t>& nodes,
                             const std::vector<OracleEdge>& edges) {
  if (nodes.size() <= 1) return true;
  std::vector<std::vector<std::uint32_t>> adj;
  std::vector<std::uint32_t> index(1 + *std::max_element(nodes.begin(), nodes.end()), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = static_cast<std::uint32_t>(i);
  adj.resize(nodes.size());
  for (const auto& e : edges) {
    adj[index[e.u]].push_back(index[e.v]);
    adj[index[e.v]].push_back(index[e.u]);
  }
  std::vector<char> seen(nodes.size(), 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const auto cur = stack.back();
    stack.pop_back();
    for (const auto nxt : adj[cur])
      if (!seen[nxt]) {
        seen[nxt] = 1;
        ++visited;
        stack.push_back(nxt);
      }
  }
  return visited == nodes.size();
}

// Minimum spanning tree weight by exhaustive enumeration: depth-first over
// the edge list, keeping a union-find per branch. Edges are tried in
// ascending weight so the running best prunes aggressively; feasible up to
// roughly n = 10 on dense graphs.
class ExhaustiveMst {
 public:
  ExhaustiveMst(const std::vector<std::uint32_t>& nodes, std::vector<OracleEdge> edges)
      : n_(static_cast<std::uint32_t>(nodes.size())), edges_(std::move(edges)) {
    std::vector<std::uint32_t> index(nodes.empty() ? 0 : 1 + *std::max_element(nodes.begin(), nodes.end()), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = static_cast<std::uint32_t>(i);
    for (auto& e : edges_) {
      e.u = index[e.u];
      e.v = index[e.v];
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const OracleEdge& a, const OracleEdge& b) { return a.weight < b.weight; });
  }

  // nullopt when no spanning tree exists.
  std::optional<double> min_weight() {
    if (n_ == 0) return std::nullopt;
    if (n_ == 1) return 0.0;
    best_ = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> parent(n_);
    std::iota(parent.begin(), parent.end(), 0u);
    recurse(0, 0, 0.0, parent);
    if (best_ == std::numeric_limits<double>::infinity()) return std::nullopt;
    return best_;
  }

 private:
  std::uint32_t find(std::vector<std::uint32_t>& parent, std::uint32_t x) const {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }

  void recurse(std::size_t idx, std::uint32_t chosen, double weight,
               std::vector<std::uint32_t>& parent) {
    if (chosen == n_ - 1) {
      best_ = std::min(best_, weight);
      return;
    }
    if (idx >= edges_.size()) return;
    if (edges_.size() - idx < n_ - 1 - chosen) return;
    if (weight >= best_) return;

    const auto& e = edges_[idx];
    const auto ru = find(parent, e.u);
    const auto rv = find(parent, e.v);
    if (ru != rv) {
      auto saved = parent;
      parent[ru] = rv;
      recurse(idx + 1, chosen + 1, weight + e.weight, parent);
      parent = std::move(saved);
    }
    recurse(idx + 1, chosen, weight, parent);
  }

  std::uint32_t n_;
  std::vector<OracleEdge> edges_;
  double best_ = 0.0;
};

// Unit-disk edges over the members of `live` at one position row.
inline std::vector<OracleEdge> oracle_disk_edges(std::span<const dgsim::Point> positions,
                                                 const dgsim::NodeSet& live, double tx_range) {
  std::vector<std::uint32_t> members;
  live.for_each([&](dgsim::NodeId id) { members.push_back(id); });
  std::vector<OracleEdge> edges;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      const double d = dgsim::distance(positions[members[a]], positions[members[b]]);
      if (d <= tx_range) edges.push_back({members[a], members[b], d});
    }
  return edges;
}

// Window intersection built from scratch: an edge survives iff it is within
// range in every round of [start, end]; its weight is the plain geometric
// mean of the per-round distances.
inline std::vector<OracleEdge> oracle_intersection(const dgsim::MobilityProfile& profile,
                                                   const dgsim::NodeSet& live, double tx_range,
                                                   dgsim::Round start, dgsim::Round end) {
  std::vector<std::uint32_t> members;
  live.for_each([&](dgsim::NodeId id) { members.push_back(id); });
  std::vector<OracleEdge> edges;
  const auto window = static_cast<double>(end - start + 1);
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      bool present = true;
      double log_sum = 0.0;
      for (dgsim::Round r = start; r <= end && present; ++r) {
        const double d = dgsim::distance(profile.position_at(members[a], r),
                                         profile.position_at(members[b], r));
        if (d > tx_range)
          present = false;
        else
          log_sum += std::log(d);
      }
      if (present) edges.push_back({members[a], members[b], std::exp(log_sum / window)});
    }
  return edges;
}

inline bool oracle_window_connected(const dgsim::MobilityProfile& profile,
                                    const dgsim::NodeSet& live, double tx_range,
                                    dgsim::Round start, dgsim::Round end) {
  std::vector<std::uint32_t> members;
  live.for_each([&](dgsim::NodeId id) { members.push_back(id); });
  return oracle_connected(members, oracle_intersection(profile, live, tx_range, start, end));
}

}  // namespace dgtest
