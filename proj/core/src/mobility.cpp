#include "dgsim/mobility.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dgsim/errors.hpp"
#include "dgsim/rng.hpp"

namespace dgsim {

namespace {

constexpr char kMagic[4] = {'D', 'G', 'M', 'P'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kSpeedBoundSlack = 1e-9;  // m, absolute

}  // namespace

void validate(const FieldConfig& field) {
  if (!(field.width > 0.0)) throw ConfigError("FieldConfig.width must be > 0");
  if (!(field.height > 0.0)) throw ConfigError("FieldConfig.height must be > 0");
}

void validate(const MobilityConfig& mob) {
  if (mob.node_count == 0) throw ConfigError("MobilityConfig.node_count must be > 0");
  if (mob.static_count > mob.node_count)
    throw ConfigError("MobilityConfig.static_count must be <= node_count");
  if (!(mob.v_max > 0.0)) throw ConfigError("MobilityConfig.v_max must be > 0");
  if (!(mob.round_period > 0.0))
    throw ConfigError("MobilityConfig.round_period must be > 0");
  if (mob.horizon_rounds < 1)
    throw ConfigError("MobilityConfig.horizon_rounds must be >= 1");
}

Point MobilityProfile::position_at(NodeId node, Round round) const {
  if (round >= cfg_.horizon_rounds)
    throw std::out_of_range("round " + std::to_string(round) +
                            " >= horizon_rounds " +
                            std::to_string(cfg_.horizon_rounds));
  if (node >= cfg_.node_count)
    throw std::out_of_range("node " + std::to_string(node) + " >= node_count " +
                            std::to_string(cfg_.node_count));
  return positions_[static_cast<std::size_t>(round) * cfg_.node_count + node];
}

MobilityProfile generate_profile(const FieldConfig& field, const MobilityConfig& mob) {
  validate(field);
  validate(mob);

  MobilityProfile profile;
  profile.field_ = field;
  profile.cfg_ = mob;

  const std::uint32_t n = mob.node_count;
  const std::uint32_t horizon = mob.horizon_rounds;

  // Static subset by seeded shuffle.
  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  SplitMix64 shuffle_rng(stream_seed(mob.seed, "static-set"));
  for (std::uint32_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::uint32_t>(shuffle_rng.next_below(i + 1));
    std::swap(ids[i], ids[j]);
  }
  profile.static_set_ = NodeSet(n);
  for (std::uint32_t i = 0; i < mob.static_count; ++i) profile.static_set_.set(ids[i]);

  profile.positions_.resize(static_cast<std::size_t>(horizon) * n);
  const std::uint64_t node_stream_base = stream_seed(mob.seed, "node");

  for (NodeId node = 0; node < n; ++node) {
    SplitMix64 rng(mix_seed(node_stream_base, node));
    Point pos{rng.uniform(0.0, field.width), rng.uniform(0.0, field.height)};
    profile.positions_[node] = pos;

    if (profile.static_set_.test(node)) {
      for (Round r = 1; r < horizon; ++r)
        profile.positions_[static_cast<std::size_t>(r) * n + node] = pos;
      continue;
    }

    Point target{rng.uniform(0.0, field.width), rng.uniform(0.0, field.height)};
    double speed = mob.v_max * (1.0 - rng.next_double());

    for (Round r = 1; r < horizon; ++r) {
      double time_left = mob.round_period;
      while (time_left > 0.0) {
        const double dist = distance(pos, target);
        const double time_to_target = dist / speed;
        if (time_to_target <= time_left) {
          pos = target;
          time_left -= time_to_target;
          target = Point{rng.uniform(0.0, field.width),
                         rng.uniform(0.0, field.height)};
          speed = mob.v_max * (1.0 - rng.next_double());
        } else {
          const double frac = speed * time_left / dist;
          pos.x += (target.x - pos.x) * frac;
          pos.y += (target.y - pos.y) * frac;
          time_left = 0.0;
        }
      }
      profile.positions_[static_cast<std::size_t>(r) * n + node] = pos;
    }
  }
  return profile;
}

void MobilityProfile::check_invariants() const {
  validate(field_);
  validate(cfg_);
  const std::uint32_t n = cfg_.node_count;
  if (static_set_.universe() != n)
    throw ValidationError("static set universe does not match node_count");
  if (static_set_.count() != cfg_.static_count)
    throw ValidationError("static set size does not match static_count");
  if (positions_.size() != static_cast<std::size_t>(cfg_.horizon_rounds) * n)
    throw ValidationError("position table size does not match horizon and node_count");

  const double max_step = cfg_.v_max * cfg_.round_period + kSpeedBoundSlack;
  for (Round r = 0; r < cfg_.horizon_rounds; ++r) {
    const auto pts = row(r);
    for (NodeId node = 0; node < n; ++node) {
      const Point p = pts[node];
      if (!(p.x >= 0.0 && p.x <= field_.width && p.y >= 0.0 && p.y <= field_.height))
        throw ValidationError("position outside field at round " + std::to_string(r) +
                              ", node " + std::to_string(node));
      if (r > 0) {
        const Point prev = row(r - 1)[node];
        if (static_set_.test(node)) {
          if (!(p == prev))
            throw ValidationError("static node " + std::to_string(node) +
                                  " moved at round " + std::to_string(r));
        } else if (distance(prev, p) > max_step) {
          throw ValidationError("node " + std::to_string(node) +
                                " exceeds speed bound at round " + std::to_string(r));
        }
      }
    }
  }
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
 public:
  ByteReader(const std::string& data) : data_(data) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
  std::uint64_t u64() { return u(8); }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic() {
    if (data_.size() < 4 || std::memcmp(data_.data(), kMagic, 4) != 0)
      throw ParseError("bad magic", 0);
    pos_ = 4;
  }

  void expect_end() const {
    if (pos_ != data_.size()) throw ParseError("trailing bytes", pos_);
  }

  std::size_t pos() const { return pos_; }

 private:
  std::uint64_t u(int nbytes) {
    if (pos_ + nbytes > data_.size())
      throw ParseError("unexpected end of file", data_.size());
    std::uint64_t v = 0;
    for (int i = 0; i < nbytes; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += nbytes;
    return v;
  }

  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void MobilityProfile::save(const std::filesystem::path& path, ProfileFormat format) const {
  std::string out;
  if (format == ProfileFormat::Binary) {
    // Little-endian throughout; doubles as raw IEEE-754 bits.
    out.append(kMagic, 4);
    put_u32(out, kFormatVersion);
    put_f64(out, field_.width);
    put_f64(out, field_.height);
    put_f64(out, field_.sink.x);
    put_f64(out, field_.sink.y);
    put_u32(out, cfg_.node_count);
    put_u32(out, cfg_.static_count);
    put_f64(out, cfg_.v_max);
    put_f64(out, cfg_.round_period);
    put_u32(out, cfg_.horizon_rounds);
    put_u64(out, cfg_.seed);
    static_set_.for_each([&](NodeId id) { put_u32(out, id); });
    for (const Point p : positions_) {
      put_f64(out, p.x);
      put_f64(out, p.y);
    }
  } else {
    nlohmann::json j;
    j["format"] = "dgsim-profile";
    j["version"] = kFormatVersion;
    j["field"] = {{"width", field_.width},
                  {"height", field_.height},
                  {"sink", {field_.sink.x, field_.sink.y}}};
    j["mobility"] = {{"node_count", cfg_.node_count},
                     {"static_count", cfg_.static_count},
                     {"v_max", cfg_.v_max},
                     {"round_period", cfg_.round_period},
                     {"horizon_rounds", cfg_.horizon_rounds},
                     {"seed", cfg_.seed}};
    auto static_ids = nlohmann::json::array();
    static_set_.for_each([&](NodeId id) { static_ids.push_back(id); });
    j["static_nodes"] = std::move(static_ids);
    auto rounds = nlohmann::json::array();
    for (Round r = 0; r < cfg_.horizon_rounds; ++r) {
      auto flat = nlohmann::json::array();
      for (const Point p : row(r)) {
        flat.push_back(p.x);
        flat.push_back(p.y);
      }
      rounds.push_back(std::move(flat));
    }
    j["positions"] = std::move(rounds);
    out = j.dump();
    out.push_back('\n');
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

MobilityProfile MobilityProfile::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string data = buf.str();

  MobilityProfile profile;
  if (data.size() >= 4 && std::memcmp(data.data(), kMagic, 4) == 0) {
    ByteReader r(data);
    r.expect_magic();
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
      throw ParseError("unsupported profile version " + std::to_string(version), r.pos());
    profile.field_.width = r.f64();
    profile.field_.height = r.f64();
    profile.field_.sink.x = r.f64();
    profile.field_.sink.y = r.f64();
    profile.cfg_.node_count = r.u32();
    profile.cfg_.static_count = r.u32();
    profile.cfg_.v_max = r.f64();
    profile.cfg_.round_period = r.f64();
    profile.cfg_.horizon_rounds = r.u32();
    profile.cfg_.seed = r.u64();
    if (profile.cfg_.static_count > profile.cfg_.node_count)
      throw ParseError("static_count exceeds node_count", r.pos());
    profile.static_set_ = NodeSet(profile.cfg_.node_count);
    for (std::uint32_t i = 0; i < profile.cfg_.static_count; ++i) {
      const std::uint32_t id = r.u32();
      if (id >= profile.cfg_.node_count) throw ParseError("static node id out of range", r.pos());
      profile.static_set_.set(id);
    }
    const std::size_t count =
        static_cast<std::size_t>(profile.cfg_.horizon_rounds) * profile.cfg_.node_count;
    profile.positions_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      profile.positions_[i].x = r.f64();
      profile.positions_[i].y = r.f64();
    }
    r.expect_end();
  } else {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(data);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), e.byte);
    }
    try {
      if (j.at("format") != "dgsim-profile")
        throw ParseError("not a dgsim-profile file", 0);
      if (j.at("version") != kFormatVersion)
        throw ParseError("unsupported profile version", 0);
      const auto& jf = j.at("field");
      profile.field_.width = jf.at("width");
      profile.field_.height = jf.at("height");
      profile.field_.sink.x = jf.at("sink").at(0);
      profile.field_.sink.y = jf.at("sink").at(1);
      const auto& jm = j.at("mobility");
      profile.cfg_.node_count = jm.at("node_count");
      profile.cfg_.static_count = jm.at("static_count");
      profile.cfg_.v_max = jm.at("v_max");
      profile.cfg_.round_period = jm.at("round_period");
      profile.cfg_.horizon_rounds = jm.at("horizon_rounds");
      profile.cfg_.seed = jm.at("seed");
      profile.static_set_ = NodeSet(profile.cfg_.node_count);
      for (const auto& id : j.at("static_nodes")) {
        const std::uint32_t v = id;
        if (v >= profile.cfg_.node_count) throw ParseError("static node id out of range", 0);
        profile.static_set_.set(v);
      }
      const auto& rounds = j.at("positions");
      if (rounds.size() != profile.cfg_.horizon_rounds)
        throw ParseError("positions round count mismatch", 0);
      profile.positions_.reserve(
          static_cast<std::size_t>(profile.cfg_.horizon_rounds) * profile.cfg_.node_count);
      for (const auto& flat : rounds) {
        if (flat.size() != static_cast<std::size_t>(profile.cfg_.node_count) * 2)
          throw ParseError("positions row length mismatch", 0);
        for (std::size_t i = 0; i < flat.size(); i += 2)
          profile.positions_.push_back(Point{flat[i], flat[i + 1]});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), 0);
    }
  }

  profile.check_invariants();
  return profile;
}

}  // namespace dgsim
