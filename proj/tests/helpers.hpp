#pragma once

// Shared fixtures: temp directories and hand-scripted mobility profiles.
// Scripted profiles go through the public JSON format and load(), so every
// test input passes the same validation as a real file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <dgsim/geometry.hpp>
#include <dgsim/mobility.hpp>

namespace dgtest {

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / ("dgsim-test-" + std::to_string(rd()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw std::runtime_error("could not create temp directory");
  }

  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Builds a profile from explicit per-round position rows. v_max defaults to
// the tightest bound the rows allow, so the loader's speed check still bites
// on anything faster than the scripted motion.
class ScriptedProfile {
 public:
  ScriptedProfile(std::uint32_t node_count, double width = 100.0, double height = 100.0)
      : node_count_(node_count) {
    field_.width = width;
    field_.height = height;
  }

  ScriptedProfile& sink(dgsim::Point p) {
    field_.sink = p;
    return *this;
  }

  ScriptedProfile& round_period(double s) {
    round_period_ = s;
    return *this;
  }

  ScriptedProfile& v_max(double v) {
    v_max_ = v;
    return *this;
  }

  ScriptedProfile& seed(std::uint64_t s) {
    seed_ = s;
    return *this;
  }

  ScriptedProfile& static_nodes(std::vector<std::uint32_t> ids) {
    static_nodes_ = std::move(ids);
    return *this;
  }

  ScriptedProfile& add_round(std::vector<dgsim::Point> row) {
    if (row.size() != node_count_) throw std::runtime_error("row size != node_count");
    rows_.push_back(std::move(row));
    return *this;
  }

  // Repeats the last row `times` more times (static tail).
  ScriptedProfile& repeat_last(std::uint32_t times) {
    if (rows_.empty()) throw std::runtime_error("no row to repeat");
    for (std::uint32_t i = 0; i < times; ++i) rows_.push_back(rows_.back());
    return *this;
  }

  dgsim::MobilityProfile build(const TempDir& dir) const {
    if (rows_.empty()) throw std::runtime_error("no rows scripted");

    double v = v_max_;
    if (v <= 0.0) {
      double max_step = 0.0;
      for (std::size_t r = 1; r < rows_.size(); ++r)
        for (std::uint32_t i = 0; i < node_count_; ++i)
          max_step = std::max(max_step, dgsim::distance(rows_[r - 1][i], rows_[r][i]));
      v = std::max(1.0, max_step / round_period_ * (1.0 + 1e-9));
    }

    nlohmann::json j;
    j["format"] = "dgsim-profile";
    j["version"] = 1;
    j["field"] = {{"width", field_.width},
                  {"height", field_.height},
                  {"sink", {field_.sink.x, field_.sink.y}}};
    j["mobility"] = {{"node_count", node_count_},
                     {"static_count", static_cast<std::uint32_t>(static_nodes_.size())},
                     {"v_max", v},
                     {"round_period", round_period_},
                     {"horizon_rounds", static_cast<std::uint32_t>(rows_.size())},
                     {"seed", seed_}};
    j["static_nodes"] = static_nodes_;
    auto rounds = nlohmann::json::array();
    for (const auto& row : rows_) {
      auto flat = nlohmann::json::array();
      for (const auto p : row) {
        flat.push_back(p.x);
        flat.push_back(p.y);
      }
      rounds.push_back(std::move(flat));
    }
    j["positions"] = std::move(rounds);

    static int counter = 0;
    const auto path = dir.file("scripted-" + std::to_string(counter++) + ".json");
    std::ofstream out(path, std::ios::binary);
    out << j.dump() << '\n';
    out.close();
    return dgsim::MobilityProfile::load(path);
  }

 private:
  std::uint32_t node_count_;
  dgsim::FieldConfig field_;
  double round_period_ = 0.25;
  double v_max_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> static_nodes_;
  std::vector<std::vector<dgsim::Point>> rows_;
};

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dgtest
