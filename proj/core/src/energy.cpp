#include "dgsim/energy.hpp"

#include "dgsim/errors.hpp"

namespace dgsim {

void EnergyConfig::validate() const {
  if (!(e_elec > 0.0)) throw ConfigError("energy.e_elec must be positive");
  if (!(eps_amp > 0.0)) throw ConfigError("energy.eps_amp must be positive");
  if (!(initial_energy > 0.0)) throw ConfigError("energy.initial_energy must be positive");
  if (data_packet_bits == 0) throw ConfigError("energy.data_packet_bits must be positive");
  if (control_packet_bits == 0) throw ConfigError("energy.control_packet_bits must be positive");
}

double tx_energy(const EnergyConfig& cfg, std::uint32_t bits, double distance_m) {
  const double k = static_cast<double>(bits);
  return cfg.e_elec * k + cfg.eps_amp * k * distance_m * distance_m;
}

double rx_energy(const EnergyConfig& cfg, std::uint32_t bits) {
  return cfg.e_elec * static_cast<double>(bits);
}

EnergyLedger::EnergyLedger(double initial_energy, NodeId node_count)
    : residual_(node_count, initial_energy),
      failure_time_(node_count, -1.0),
      live_(NodeSet::full(node_count)) {}

std::optional<double> EnergyLedger::failure_time(NodeId id) const {
  if (failure_time_[id] < 0.0) return std::nullopt;
  return failure_time_[id];
}

void EnergyLedger::charge(NodeId id, double joules) {
  if (!live_.test(id)) return;
  residual_[id] -= joules;
}

std::vector<NodeId> EnergyLedger::collect_failures(double time_s) {
  std::vector<NodeId> failed;
  live_.for_each([&](NodeId id) {
    if (residual_[id] <= 0.0) failed.push_back(id);
  });
  for (const NodeId id : failed) {
    residual_[id] = 0.0;
    failure_time_[id] = time_s;
    live_.reset(id);
  }
  return failed;
}

std::vector<NodeId> charge_gathering_round(EnergyLedger& ledger, const EnergyConfig& cfg,
                                           const RootedTree& tree,
                                           std::span<const Point> positions, Point sink,
                                           double time_s) {
  const double rx_per_child = rx_energy(cfg, cfg.data_packet_bits);
  tree.nodes.for_each([&](NodeId id) {
    double joules = rx_per_child * tree.child_count(id);
    if (tree.parent[id] >= 0) {
      const Point target = positions[static_cast<NodeId>(tree.parent[id])];
      joules += tx_energy(cfg, cfg.data_packet_bits, distance(positions[id], target));
    } else {
      joules += tx_energy(cfg, cfg.data_packet_bits, distance(positions[id], sink));
    }
    ledger.charge(id, joules);
  });
  return ledger.collect_failures(time_s);
}

std::vector<NodeId> charge_discovery(EnergyLedger& ledger, const EnergyConfig& cfg,
                                     const StaticGraph& snapshot, double time_s) {
  const double broadcast = tx_energy(cfg, cfg.control_packet_bits, snapshot.tx_range());
  const double rx_each = rx_energy(cfg, cfg.control_packet_bits);
  snapshot.live().for_each([&](NodeId id) {
    ledger.charge(id, broadcast + rx_each * snapshot.neighbor_count(id));
  });
  return ledger.collect_failures(time_s);
}

std::vector<NodeId> charge_discovery(EnergyLedger& ledger, const EnergyConfig& cfg,
                                     std::span<const Point> positions, const NodeSet& live,
                                     double tx_range, double time_s) {
  const StaticGraph snapshot = StaticGraph::build(positions, live, tx_range, 0);
  return charge_discovery(ledger, cfg, snapshot, time_s);
}

}  // namespace dgsim
