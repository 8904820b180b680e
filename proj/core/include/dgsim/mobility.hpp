#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dgsim/geometry.hpp"
#include "dgsim/node_set.hpp"

namespace dgsim {

// Rectangular deployment field. The sink may lie outside the rectangle;
// node positions never do.
struct FieldConfig {
  double width = 100.0;
  double height = 100.0;
  Point sink{50.0, 300.0};

  friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

struct MobilityConfig {
  std::uint32_t node_count = 100;
  std::uint32_t static_count = 0;
  double v_max = 3.0;           // m/s
  double round_period = 0.25;   // s between topology samples
  std::uint32_t horizon_rounds = 24000;
  std::uint64_t seed = 0;

  friend bool operator==(const MobilityConfig&, const MobilityConfig&) = default;
};

// Throw ConfigError naming the offending field.
void validate(const FieldConfig& field);
void validate(const MobilityConfig& mob);

enum class ProfileFormat { Binary, Json };

// Sampled random-waypoint motion of every node over the full horizon:
// one position per (round, node), round-major. Immutable once generated
// or loaded; safe to share read-only across threads.
//
// Generation is a pure function of (FieldConfig, MobilityConfig). Stream
// discipline, all SplitMix64 (see rng.hpp):
//   * static-set selection: stream_seed(seed, "static-set") drives a
//     Fisher-Yates shuffle of [0, node_count); the first static_count ids
//     are the static nodes.
//   * node motion: per-node stream mix_seed(stream_seed(seed, "node"), id).
//     Draw order: initial x, initial y, then per waypoint leg
//     target x, target y, speed. Speed is v_max * (1 - u) with u in [0,1),
//     i.e. uniform on (0, v_max]; waypoint pause time is zero.
// Positions are sampled exactly at multiples of round_period: sample r is
// the node position after r * round_period seconds of motion.
class MobilityProfile {
 public:
  const FieldConfig& field() const { return field_; }
  const MobilityConfig& config() const { return cfg_; }

  std::uint32_t node_count() const { return cfg_.node_count; }
  std::uint32_t horizon_rounds() const { return cfg_.horizon_rounds; }

  // Bounds-checked replay accessor; throws std::out_of_range.
  Point position_at(NodeId node, Round round) const;

  // All node positions at one round, indexed by node id.
  std::span<const Point> row(Round round) const {
    return {positions_.data() +
                static_cast<std::size_t>(round) * cfg_.node_count,
            cfg_.node_count};
  }

  bool is_static(NodeId node) const { return static_set_.test(node); }
  const NodeSet& static_set() const { return static_set_; }

  void save(const std::filesystem::path& path, ProfileFormat format) const;

  // Auto-detects the format, re-validates every profile invariant.
  // Throws ParseError (malformed) or ValidationError (invariant broken).
  static MobilityProfile load(const std::filesystem::path& path);

  friend bool operator==(const MobilityProfile&, const MobilityProfile&) = default;

  friend MobilityProfile generate_profile(const FieldConfig&, const MobilityConfig&);

 private:
  MobilityProfile() = default;
  void check_invariants() const;

  FieldConfig field_;
  MobilityConfig cfg_;
  NodeSet static_set_;
  std::vector<Point> positions_;  // round-major, horizon_rounds * node_count
};

MobilityProfile generate_profile(const FieldConfig& field, const MobilityConfig& mob);

}  // namespace dgsim
