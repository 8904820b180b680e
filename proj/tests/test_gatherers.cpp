#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <dgsim/energy.hpp>
#include <dgsim/gatherers.hpp>
#include <dgsim/mobility.hpp>
#include <dgsim/node_set.hpp>
#include <dgsim/topology.hpp>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace dgsim;
using dgtest::ScriptedProfile;
using dgtest::TempDir;

namespace {

// Chain 0-1-2 at 10 m spacing; tx 12 keeps exactly the chain edges.
std::vector<Point> chain_row() { return {{0.0, 0.0}, {10.0, 0.0}, {20.0, 0.0}}; }

}  // namespace

TEST_CASE("epoch search finds the longest connected window") {
  TempDir dir;
  // Rounds 0..1 keep the chain; round 2 sends node 2 away; 3..4 restore it.
  const auto profile = ScriptedProfile(3)
                           .add_round(chain_row())
                           .add_round(chain_row())
                           .add_round({{0.0, 0.0}, {10.0, 0.0}, {40.0, 0.0}})
                           .add_round(chain_row())
                           .add_round(chain_row())
                           .build(dir);
  const NodeSet live(3, true);

  const auto epoch = max_stability_find_epoch(profile, live, 12.0, 0, 4);
  REQUIRE(epoch.has_value());
  CHECK(epoch->start == 0);
  CHECK(epoch->end == 1);
  CHECK(epoch->tree.edges.size() == 2);

  const auto tail = max_stability_find_epoch(profile, live, 12.0, 3, 4);
  REQUIRE(tail.has_value());
  CHECK(tail->start == 3);
  CHECK(tail->end == 4);
}

TEST_CASE("window can break even though every snapshot stays connected") {
  TempDir dir;
  // Round 0: edges 0-1, 1-2. Round 1: node 0 crosses to the far side of 2:
  // edges 0-2, 1-2. Both snapshots are connected chains, but the
  // intersection keeps only 1-2.
  const auto profile = ScriptedProfile(3)
                           .add_round({{0.0, 0.0}, {10.0, 0.0}, {20.0, 0.0}})
                           .add_round({{30.0, 0.0}, {10.0, 0.0}, {20.0, 0.0}})
                           .build(dir);
  const NodeSet live(3, true);

  const auto epoch = max_stability_find_epoch(profile, live, 12.0, 0, 1);
  REQUIRE(epoch.has_value());
  CHECK(epoch->start == 0);
  CHECK(epoch->end == 0);
}

TEST_CASE("disconnected start round yields no epoch") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .add_round({{0.0, 0.0}, {10.0, 0.0}, {60.0, 0.0}})
                           .add_round({{0.0, 0.0}, {10.0, 0.0}, {60.0, 0.0}})
                           .build(dir);
  CHECK_FALSE(max_stability_find_epoch(profile, NodeSet(3, true), 12.0, 0, 1).has_value());
}

TEST_CASE("empty live set yields no epoch; a singleton spans the horizon") {
  TempDir dir;
  const auto profile = ScriptedProfile(2)
                           .add_round({{0.0, 0.0}, {50.0, 0.0}})
                           .repeat_last(4)
                           .build(dir);
  CHECK_FALSE(max_stability_find_epoch(profile, NodeSet(2), 12.0, 0, 4).has_value());

  NodeSet lone(2);
  lone.set(1);
  const auto epoch = max_stability_find_epoch(profile, lone, 12.0, 0, 4);
  REQUIRE(epoch.has_value());
  CHECK(epoch->start == 0);
  CHECK(epoch->end == 4);
  CHECK(epoch->tree.edges.empty());
  CHECK(epoch->tree.nodes.count() == 1);
}

TEST_CASE("all-static live sets extend to the horizon in one step") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .static_nodes({0, 1, 2})
                           .add_round(chain_row())
                           .repeat_last(99)
                           .build(dir);
  const auto epoch = max_stability_find_epoch(profile, NodeSet(3, true), 12.0, 0, 99);
  REQUIRE(epoch.has_value());
  CHECK(epoch->start == 0);
  CHECK(epoch->end == 99);
  // Window weights go through a log-mean, so 10 m only survives to ~1e-14.
  REQUIRE(epoch->tree.edges.size() == 2);
  CHECK(epoch->tree.edges[0].u == 0);
  CHECK(epoch->tree.edges[0].v == 1);
  CHECK(epoch->tree.edges[0].weight == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(epoch->tree.edges[1].u == 1);
  CHECK(epoch->tree.edges[1].v == 2);
  CHECK(epoch->tree.edges[1].weight == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("epoch search rejects windows outside the horizon") {
  TempDir dir;
  const auto profile =
      ScriptedProfile(2).add_round({{0.0, 0.0}, {5.0, 0.0}}).repeat_last(2).build(dir);
  CHECK_THROWS_AS(max_stability_find_epoch(profile, NodeSet(2, true), 12.0, 0, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(max_stability_find_epoch(profile, NodeSet(2, true), 12.0, 3, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(max_stability_find_epoch(profile, NodeSet(2, true), 12.0, 2, 1),
                  std::invalid_argument);
}

TEST_CASE("epoch maximality against the from-scratch oracle") {
  FieldConfig field;
  MobilityConfig mob;
  mob.node_count = 6;
  mob.static_count = 0;
  mob.v_max = 10.0;
  mob.horizon_rounds = 30;

  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    mob.seed = seed;
    const auto profile = generate_profile(field, mob);
    const NodeSet live(6, true);
    const double tx = 30.0;
    const Round last = mob.horizon_rounds - 1;

    Round start = 0;
    while (start <= last) {
      const auto epoch = max_stability_find_epoch(profile, live, tx, start, last);
      if (!epoch) {
        CHECK_FALSE(dgtest::oracle_window_connected(profile, live, tx, start, start));
        ++start;
        continue;
      }
      CHECK(epoch->start == start);
      CHECK(dgtest::oracle_window_connected(profile, live, tx, start, epoch->end));
      if (epoch->end < last)
        CHECK_FALSE(dgtest::oracle_window_connected(profile, live, tx, start, epoch->end + 1));

      // The tree must be a minimum spanning tree of the window intersection.
      std::vector<std::uint32_t> nodes;
      live.for_each([&](NodeId id) { nodes.push_back(id); });
      auto oracle_edges = dgtest::oracle_intersection(profile, live, tx, start, epoch->end);
      const auto best = dgtest::ExhaustiveMst(nodes, oracle_edges).min_weight();
      REQUIRE(best.has_value());
      CHECK(epoch->tree.total_weight == doctest::Approx(*best).epsilon(1e-9));

      start = epoch->end + 1;
    }
  }
}

TEST_CASE("tree validity tracks liveness and current distances") {
  TempDir dir;
  const auto profile =
      ScriptedProfile(3).add_round(chain_row()).repeat_last(1).build(dir);
  const auto g = StaticGraph::build(profile.row(0), NodeSet(3, true), 12.0, 0);
  const auto mst = prim_mst(g);
  REQUIRE(mst.has_value());
  const auto tree = bfs_root(*mst, 0);

  NodeSet live(3, true);
  CHECK(tree_valid(tree, profile.row(0), live, 12.0));

  SUBCASE("a dead member invalidates the tree") {
    live.reset(1);
    CHECK_FALSE(tree_valid(tree, profile.row(0), live, 12.0));
  }
  SUBCASE("a dead outsider is irrelevant") {
    // Node ids beyond the tree do not exist here; shrink tx instead to
    // verify the distance check uses current positions.
    const std::vector<Point> stretched{{0.0, 0.0}, {13.0, 0.0}, {20.0, 0.0}};
    CHECK_FALSE(tree_valid(tree, stretched, live, 12.0));
    const std::vector<Point> snug{{0.0, 0.0}, {9.0, 0.0}, {20.0, 0.0}};
    CHECK(tree_valid(tree, snug, live, 12.0));
  }
  SUBCASE("exact-range parent links stay valid") {
    const std::vector<Point> edge_case{{0.0, 0.0}, {12.0, 0.0}, {20.0, 0.0}};
    CHECK(tree_valid(tree, edge_case, live, 12.0));
  }
}

TEST_CASE("look-ahead gatherer serves its window then replans") {
  TempDir dir;
  // Chain for rounds 0..2, node 2 out at 3, chain again 4..6.
  const auto away = std::vector<Point>{{0.0, 0.0}, {10.0, 0.0}, {40.0, 0.0}};
  const auto profile = ScriptedProfile(3)
                           .add_round(chain_row())
                           .add_round(chain_row())
                           .add_round(chain_row())
                           .add_round(away)
                           .add_round(chain_row())
                           .add_round(chain_row())
                           .add_round(chain_row())
                           .build(dir);

  MaxStabilityGatherer g(profile, 12.0, profile.horizon_rounds(), 42);
  std::vector<TreeRecord> records;
  g.set_trace([&](const TreeRecord& r) { records.push_back(r); });

  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;

  for (Round r = 0; r <= 2; ++r) {
    CHECK(g.prepare_round(r, cfg, ledger, (r + 1) * 0.25, failures));
    CHECK(g.epoch_start() == 0);
    CHECK(g.epoch_end() == 2);
  }
  CHECK(g.discovery_count() == 1);
  CHECK(failures.empty());

  // Round 3: replan finds a disconnected snapshot, so no tree this round.
  CHECK_FALSE(g.prepare_round(3, cfg, ledger, 4 * 0.25, failures));
  CHECK(g.discovery_count() == 1);
  REQUIRE(records.size() == 1);
  CHECK(records[0].start == 0);
  CHECK(records[0].end == 2);

  // Round 4: fresh epoch to the horizon.
  CHECK(g.prepare_round(4, cfg, ledger, 5 * 0.25, failures));
  CHECK(g.epoch_start() == 4);
  CHECK(g.epoch_end() == 6);
  CHECK(g.discovery_count() == 2);

  g.prepare_round(5, cfg, ledger, 6 * 0.25, failures);
  g.prepare_round(6, cfg, ledger, 7 * 0.25, failures);
  g.finish(6);
  REQUIRE(records.size() == 2);
  CHECK(records[1].start == 4);
  CHECK(records[1].end == 6);
  CHECK(g.discovery_count() == 2);
}

TEST_CASE("discovery flood is charged only on successful builds") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .add_round({{0.0, 0.0}, {10.0, 0.0}, {60.0, 0.0}})
                           .repeat_last(3)
                           .build(dir);
  MaxStabilityGatherer g(profile, 12.0, profile.horizon_rounds(), 1);
  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;

  CHECK_FALSE(g.prepare_round(0, cfg, ledger, 0.25, failures));
  CHECK(g.discovery_count() == 0);
  for (NodeId id = 0; id < 3; ++id) CHECK(ledger.residual(id) == 2.0);
}

TEST_CASE("failure mid-window truncates the record and replans at once") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .static_nodes({0, 1, 2})
                           .add_round(chain_row())
                           .repeat_last(9)
                           .build(dir);

  MaxStabilityGatherer g(profile, 12.0, profile.horizon_rounds(), 7);
  std::vector<TreeRecord> records;
  g.set_trace([&](const TreeRecord& r) { records.push_back(r); });

  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;

  REQUIRE(g.prepare_round(0, cfg, ledger, 0.25, failures));
  CHECK(g.epoch_end() == 9);
  const double d0 = 2.0 - ledger.residual(0);

  g.prepare_round(1, cfg, ledger, 0.5, failures);
  g.prepare_round(2, cfg, ledger, 0.75, failures);
  CHECK(g.discovery_count() == 1);

  // Node 2's battery dies during round 3's gathering.
  ledger.charge(2, 10.0);
  auto newly = ledger.collect_failures(1.0);
  REQUIRE(newly == std::vector<NodeId>{2});

  failures.clear();
  g.on_failures(3, cfg, ledger, 1.0, failures);

  // Old window is bookkept as ending at round 2; the replacement starts at
  // round 3 over the survivors and was charged one more flood.
  REQUIRE(records.size() == 1);
  CHECK(records[0].start == 0);
  CHECK(records[0].end == 2);
  CHECK(g.discovery_count() == 2);
  CHECK(g.has_tree());
  CHECK(g.epoch_start() == 3);
  CHECK(g.epoch_end() == 9);
  CHECK(g.tree().nodes.count() == 2);
  CHECK_FALSE(g.tree().nodes.test(2));
  CHECK(2.0 - ledger.residual(0) > d0);  // flood cost hit the survivors

  g.finish(9);
  REQUIRE(records.size() == 2);
  CHECK(records[1].start == 3);
  CHECK(records[1].end == 9);
}

TEST_CASE("failure on a window's first round leaves a degenerate record") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .static_nodes({0, 1, 2})
                           .add_round(chain_row())
                           .repeat_last(5)
                           .build(dir);
  MaxStabilityGatherer g(profile, 12.0, profile.horizon_rounds(), 7);
  std::vector<TreeRecord> records;
  g.set_trace([&](const TreeRecord& r) { records.push_back(r); });

  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;
  REQUIRE(g.prepare_round(0, cfg, ledger, 0.25, failures));

  ledger.charge(2, 10.0);
  ledger.collect_failures(0.25);
  g.on_failures(0, cfg, ledger, 0.25, failures);

  // A window that could not complete its own first round closes on that
  // same round (there is no earlier round to point at).
  REQUIRE(records.size() == 1);
  CHECK(records[0].start == 0);
  CHECK(records[0].end == 0);
  CHECK(g.epoch_start() == 0);
  CHECK(g.has_tree());
}

TEST_CASE("baseline keeps a static tree forever") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .static_nodes({0, 1, 2})
                           .add_round(chain_row())
                           .repeat_last(19)
                           .build(dir);
  MstDgGatherer g(profile, 12.0, 5);
  std::vector<TreeRecord> records;
  g.set_trace([&](const TreeRecord& r) { records.push_back(r); });

  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;
  for (Round r = 0; r < 20; ++r) CHECK(g.prepare_round(r, cfg, ledger, (r + 1) * 0.25, failures));
  CHECK(g.discovery_count() == 1);
  g.finish(19);
  REQUIRE(records.size() == 1);
  CHECK(records[0].start == 0);
  CHECK(records[0].end == 19);
}

// Undirected edge set of a rooted tree, root identity ignored.
static std::set<std::pair<NodeId, NodeId>> tree_edge_set(const RootedTree& tree) {
  std::set<std::pair<NodeId, NodeId>> out;
  for (NodeId u = 0; u < tree.parent.size(); ++u) {
    const auto p = tree.parent[u];
    if (p < 0) continue;
    const auto v = static_cast<NodeId>(p);
    out.insert({std::min(u, v), std::max(u, v)});
  }
  return out;
}

TEST_CASE("baseline rebuilds when an edge stretches past range") {
  TempDir dir;
  // Quadrilateral whose heaviest side (2-3) is strictly unique, so the MST
  // is root-independent: {0-1, 1-2, 0-3}. Round 3 pushes node 2 up so the
  // 1-2 tree edge breaks, but 2 stays reachable through 3.
  const std::vector<Point> square{{0.0, 0.0}, {10.0, 0.0}, {10.0, 9.0}, {0.0, 10.0}};
  const std::vector<Point> moved{{0.0, 0.0}, {10.0, 0.0}, {10.0, 13.0}, {0.0, 10.0}};
  const auto profile = ScriptedProfile(4)
                           .add_round(square)
                           .add_round(square)
                           .add_round(square)
                           .add_round(moved)
                           .add_round(moved)
                           .build(dir);

  MstDgGatherer g(profile, 12.0, 5);
  std::vector<TreeRecord> records;
  g.set_trace([&](const TreeRecord& r) { records.push_back(r); });

  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 4);
  std::vector<NodeId> failures;

  for (Round r = 0; r <= 2; ++r) REQUIRE(g.prepare_round(r, cfg, ledger, (r + 1) * 0.25, failures));
  CHECK(g.discovery_count() == 1);
  CHECK(tree_edge_set(g.tree()) ==
        std::set<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}, {0, 3}});

  // d(1,2) = 13 > 12 invalidates the tree; the snapshot stays connected
  // through 2-3 = sqrt(109), so the rebuild must use exactly the path edges.
  REQUIRE(g.prepare_round(3, cfg, ledger, 1.0, failures));
  CHECK(g.discovery_count() == 2);
  CHECK(tree_valid(g.tree(), profile.row(3), ledger.live(), 12.0));
  CHECK(tree_edge_set(g.tree()) ==
        std::set<std::pair<NodeId, NodeId>>{{0, 1}, {0, 3}, {2, 3}});
  REQUIRE(records.size() == 1);
  CHECK(records[0].start == 0);
  CHECK(records[0].end == 2);

  REQUIRE(g.prepare_round(4, cfg, ledger, 1.25, failures));
  CHECK(g.discovery_count() == 2);
  g.finish(4);
  REQUIRE(records.size() == 2);
  CHECK(records[1].start == 3);
  CHECK(records[1].end == 4);
}

TEST_CASE("baseline ignores failures until the next round") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .static_nodes({0, 1, 2})
                           .add_round(chain_row())
                           .repeat_last(9)
                           .build(dir);
  MstDgGatherer g(profile, 12.0, 5);
  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;

  REQUIRE(g.prepare_round(0, cfg, ledger, 0.25, failures));
  const auto before = g.discovery_count();

  // Node 0 dies; the hook must not rebuild or charge anything.
  ledger.charge(0, 10.0);
  ledger.collect_failures(0.25);
  const double r1 = ledger.residual(1);
  g.on_failures(0, cfg, ledger, 0.25, failures);
  CHECK(g.discovery_count() == before);
  CHECK(ledger.residual(1) == r1);

  // Next round notices the dead member and rebuilds over the survivors.
  REQUIRE(g.prepare_round(1, cfg, ledger, 0.5, failures));
  CHECK(g.discovery_count() == before + 1);
  CHECK_FALSE(g.tree().nodes.test(0));
  CHECK(g.tree().nodes.count() == 2);
}

TEST_CASE("baseline reports no tree while the snapshot is disconnected") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .add_round({{0.0, 0.0}, {10.0, 0.0}, {60.0, 0.0}})
                           .add_round(chain_row())
                           .build(dir);
  MstDgGatherer g(profile, 12.0, 5);
  EnergyConfig cfg;
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;

  CHECK_FALSE(g.prepare_round(0, cfg, ledger, 0.25, failures));
  CHECK(g.discovery_count() == 0);
  CHECK(ledger.residual(0) == 2.0);
  CHECK(g.prepare_round(1, cfg, ledger, 0.5, failures));
  CHECK(g.discovery_count() == 1);
}

TEST_CASE("leaders come deterministically from the leader stream") {
  TempDir dir;
  const auto profile = ScriptedProfile(3)
                           .static_nodes({0, 1, 2})
                           .add_round(chain_row())
                           .repeat_last(9)
                           .build(dir);
  EnergyConfig cfg;

  std::vector<NodeId> first_run, second_run;
  for (auto* out : {&first_run, &second_run}) {
    MaxStabilityGatherer g(profile, 12.0, profile.horizon_rounds(), 909);
    EnergyLedger ledger(2.0, 3);
    std::vector<NodeId> failures;
    g.prepare_round(0, cfg, ledger, 0.25, failures);
    ledger.charge(2, 10.0);
    ledger.collect_failures(0.5);
    g.on_failures(1, cfg, ledger, 0.5, failures);
    out->assign(g.leader_sequence().begin(), g.leader_sequence().end());
  }
  CHECK(first_run == second_run);
  CHECK(first_run.size() == 2);

  // Every leader must be a member of the tree it leads.
  MaxStabilityGatherer g(profile, 12.0, profile.horizon_rounds(), 909);
  EnergyLedger ledger(2.0, 3);
  std::vector<NodeId> failures;
  g.prepare_round(0, cfg, ledger, 0.25, failures);
  CHECK(g.tree().nodes.test(g.leader()));
  CHECK(g.leader() == g.tree().root);
}
