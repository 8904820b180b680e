#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <vector>

#include <json.hpp>

#include <dgsim/errors.hpp>
#include <dgsim/geometry.hpp>
#include <dgsim/mobility.hpp>
#include <dgsim/rng.hpp>

#include "helpers.hpp"

using namespace dgsim;
using dgtest::TempDir;

namespace {

MobilityConfig small_config() {
  MobilityConfig mob;
  mob.node_count = 12;
  mob.static_count = 4;
  mob.v_max = 3.0;
  mob.round_period = 0.25;
  mob.horizon_rounds = 120;
  mob.seed = 2024;
  return mob;
}

}  // namespace

TEST_CASE("config validation rejects out-of-range fields") {
  FieldConfig field;
  MobilityConfig mob = small_config();
  CHECK_NOTHROW(validate(field));
  CHECK_NOTHROW(validate(mob));

  FieldConfig bad_field = field;
  bad_field.width = 0.0;
  CHECK_THROWS_AS(validate(bad_field), ConfigError);

  MobilityConfig m1 = mob;
  m1.node_count = 0;
  CHECK_THROWS_AS(validate(m1), ConfigError);
  MobilityConfig m2 = mob;
  m2.static_count = m2.node_count + 1;
  CHECK_THROWS_AS(validate(m2), ConfigError);
  MobilityConfig m3 = mob;
  m3.v_max = 0.0;
  CHECK_THROWS_AS(validate(m3), ConfigError);
  MobilityConfig m4 = mob;
  m4.horizon_rounds = 0;
  CHECK_THROWS_AS(validate(m4), ConfigError);
  MobilityConfig m5 = mob;
  m5.round_period = -0.25;
  CHECK_THROWS_AS(validate(m5), ConfigError);
}

TEST_CASE("generation is a pure function of the config") {
  FieldConfig field;
  const auto mob = small_config();
  const auto a = generate_profile(field, mob);
  const auto b = generate_profile(field, mob);
  CHECK(a == b);

  auto other = mob;
  other.seed = 2025;
  CHECK_FALSE(a == generate_profile(field, other));
}

TEST_CASE("static subset matches the documented shuffle stream") {
  FieldConfig field;
  const auto mob = small_config();
  const auto profile = generate_profile(field, mob);

  // Fisher-Yates over [0, n) seeded from the "static-set" stream; the first
  // static_count slots of the shuffled array are the static ids.
  std::vector<NodeId> ids(mob.node_count);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  SplitMix64 rng(stream_seed(mob.seed, "static-set"));
  for (std::uint32_t i = mob.node_count - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(rng.next_below(i + 1));
    std::swap(ids[i], ids[j]);
  }
  CHECK(profile.static_set().count() == mob.static_count);
  for (std::uint32_t i = 0; i < mob.static_count; ++i) CHECK(profile.is_static(ids[i]));
}

TEST_CASE("static nodes never move; mobile nodes respect the speed bound") {
  FieldConfig field;
  const auto mob = small_config();
  const auto profile = generate_profile(field, mob);

  const double max_step = mob.v_max * mob.round_period + 1e-9;
  for (NodeId node = 0; node < mob.node_count; ++node) {
    for (Round r = 1; r < mob.horizon_rounds; ++r) {
      const auto prev = profile.position_at(node, r - 1);
      const auto cur = profile.position_at(node, r);
      if (profile.is_static(node)) {
        CHECK(cur == prev);
      } else {
        CHECK(distance(prev, cur) <= max_step);
      }
      CHECK(cur.x >= 0.0);
      CHECK(cur.x <= field.width);
      CHECK(cur.y >= 0.0);
      CHECK(cur.y <= field.height);
    }
  }
}

TEST_CASE("initial positions come straight off the per-node stream") {
  FieldConfig field;
  auto mob = small_config();
  mob.static_count = 0;
  const auto profile = generate_profile(field, mob);

  const auto node_base = stream_seed(mob.seed, "node");
  for (NodeId node = 0; node < mob.node_count; ++node) {
    SplitMix64 rng(mix_seed(node_base, node));
    const double x = rng.uniform(0.0, field.width);
    const double y = rng.uniform(0.0, field.height);
    const auto p = profile.position_at(node, 0);
    CHECK(p.x == x);
    CHECK(p.y == y);
  }
}

TEST_CASE("trajectories match an event-driven waypoint oracle") {
  // Independent re-derivation: build the absolute leg timeline from the
  // documented draw order (target x, target y, speed), then sample each
  // round by interpolation inside the covering leg. Different arithmetic
  // order than the generator, so agreement is approximate.
  FieldConfig field;
  auto mob = small_config();
  mob.static_count = 0;
  mob.horizon_rounds = 200;
  const auto profile = generate_profile(field, mob);

  const auto node_base = stream_seed(mob.seed, "node");
  for (NodeId node = 0; node < mob.node_count; ++node) {
    SplitMix64 rng(mix_seed(node_base, node));
    Point start{rng.uniform(0.0, field.width), rng.uniform(0.0, field.height)};

    struct Leg {
      double t0;
      double duration;
      Point from, to;
    };
    std::vector<Leg> legs;
    double t = 0.0;
    Point pos = start;
    const double horizon_s = (mob.horizon_rounds - 1) * mob.round_period;
    while (t <= horizon_s) {
      Point target{rng.uniform(0.0, field.width), rng.uniform(0.0, field.height)};
      const double speed = mob.v_max * (1.0 - rng.next_double());
      const double duration = distance(pos, target) / speed;
      legs.push_back({t, duration, pos, target});
      t += duration;
      pos = target;
    }

    for (Round r = 0; r < mob.horizon_rounds; ++r) {
      const double when = r * mob.round_period;
      Point expect = legs.back().to;
      for (const auto& leg : legs) {
        if (when < leg.t0 + leg.duration) {
          const double f = (when - leg.t0) / leg.duration;
          expect.x = leg.from.x + (leg.to.x - leg.from.x) * f;
          expect.y = leg.from.y + (leg.to.y - leg.from.y) * f;
          break;
        }
      }
      const auto got = profile.position_at(node, r);
      CHECK(got.x == doctest::Approx(expect.x).epsilon(1e-8).scale(100.0));
      CHECK(got.y == doctest::Approx(expect.y).epsilon(1e-8).scale(100.0));
    }
  }
}

TEST_CASE("position_at is bounds checked") {
  FieldConfig field;
  const auto mob = small_config();
  const auto profile = generate_profile(field, mob);
  CHECK_THROWS_AS(profile.position_at(0, mob.horizon_rounds), std::out_of_range);
  CHECK_THROWS_AS(profile.position_at(mob.node_count, 0), std::out_of_range);
  CHECK_NOTHROW(profile.position_at(mob.node_count - 1, mob.horizon_rounds - 1));
}

TEST_CASE("save/load round-trips bit for bit in both formats") {
  TempDir dir;
  FieldConfig field;
  const auto mob = small_config();
  const auto profile = generate_profile(field, mob);

  const auto bin = dir.file("p.dgmp");
  const auto json = dir.file("p.json");
  profile.save(bin, ProfileFormat::Binary);
  profile.save(json, ProfileFormat::Json);

  CHECK(MobilityProfile::load(bin) == profile);
  CHECK(MobilityProfile::load(json) == profile);
}

TEST_CASE("saving twice produces identical bytes") {
  TempDir dir;
  FieldConfig field;
  const auto profile = generate_profile(field, small_config());
  profile.save(dir.file("a.dgmp"), ProfileFormat::Binary);
  profile.save(dir.file("b.dgmp"), ProfileFormat::Binary);
  CHECK(dgtest::slurp(dir.file("a.dgmp")) == dgtest::slurp(dir.file("b.dgmp")));
}

TEST_CASE("truncated binary file fails to parse") {
  TempDir dir;
  FieldConfig field;
  const auto profile = generate_profile(field, small_config());
  const auto path = dir.file("p.dgmp");
  profile.save(path, ProfileFormat::Binary);

  auto bytes = dgtest::slurp(path);
  bytes.resize(bytes.size() / 2);
  const auto cut = dir.file("cut.dgmp");
  std::ofstream(cut, std::ios::binary) << bytes;
  CHECK_THROWS_AS(MobilityProfile::load(cut), ParseError);
}

TEST_CASE("unknown magic fails to parse") {
  TempDir dir;
  const auto path = dir.file("junk.dgmp");
  std::ofstream(path, std::ios::binary) << "NOPE this is not a profile";
  CHECK_THROWS_AS(MobilityProfile::load(path), ParseError);
}

TEST_CASE("json tampering trips revalidation") {
  TempDir dir;
  FieldConfig field;
  auto mob = small_config();
  const auto profile = generate_profile(field, mob);
  const auto path = dir.file("p.json");
  profile.save(path, ProfileFormat::Json);

  auto j = nlohmann::json::parse(dgtest::slurp(path));

  SUBCASE("moving a static node") {
    const std::uint32_t victim = j.at("static_nodes").at(0);
    auto& row = j.at("positions").at(1);
    row[2 * victim] = double(row[2 * victim]) + 1.0;
  }
  SUBCASE("teleporting a mobile node") {
    std::uint32_t mobile = 0;
    while (profile.is_static(mobile)) ++mobile;
    auto& row = j.at("positions").at(1);
    const auto& prev = j.at("positions").at(0);
    row[2 * mobile] = double(prev[2 * mobile]) <= 50.0 ? 99.0 : 1.0;
  }
  SUBCASE("pushing a node outside the field") {
    j.at("positions").at(0)[0] = -5.0;
  }
  SUBCASE("static id list inconsistent with static_count") {
    j.at("static_nodes").erase(0);
  }

  const auto bad = dir.file("bad.json");
  std::ofstream(bad, std::ios::binary) << j.dump();
  CHECK_THROWS_AS(MobilityProfile::load(bad), ValidationError);
}

TEST_CASE("unsupported json version fails to parse") {
  TempDir dir;
  FieldConfig field;
  const auto profile = generate_profile(field, small_config());
  const auto path = dir.file("p.json");
  profile.save(path, ProfileFormat::Json);

  auto j = nlohmann::json::parse(dgtest::slurp(path));
  j["version"] = 999;
  const auto bad = dir.file("vbad.json");
  std::ofstream(bad, std::ios::binary) << j.dump();
  CHECK_THROWS_AS(MobilityProfile::load(bad), ParseError);
}

TEST_CASE("scripted profiles load through the public format") {
  TempDir dir;
  const auto profile = dgtest::ScriptedProfile(2)
                           .add_round({{10.0, 10.0}, {20.0, 10.0}})
                           .add_round({{10.0, 10.0}, {21.0, 10.0}})
                           .static_nodes({0})
                           .build(dir);
  CHECK(profile.node_count() == 2);
  CHECK(profile.horizon_rounds() == 2);
  CHECK(profile.is_static(0));
  CHECK_FALSE(profile.is_static(1));
  CHECK(profile.position_at(1, 1).x == 21.0);
}
