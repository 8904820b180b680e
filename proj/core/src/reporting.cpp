#include "dgsim/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>

#include <json.hpp>

#include "dgsim/errors.hpp"
#include "dgsim/format.hpp"

namespace dgsim {

namespace {

using nlohmann::json;

constexpr std::string_view kRunsCsvHeader =
    "schema,tx_range_m,v_max_mps,static_nodes,profile,policy,metric,key,value";
constexpr std::string_view kSummaryCsvHeader =
    "schema,tx_range_m,v_max_mps,static_nodes,policy,profiles,node_lifetime_defined,"
    "mean_node_lifetime_s,network_lifetime_defined,mean_network_lifetime_s,"
    "mean_discovery_count,mean_rounds_completed";
constexpr std::string_view kReportCsvHeader =
    "schema,tx_range_m,v_max_mps,static_nodes,policy,metric,key,value";

std::ofstream open_out(const std::filesystem::path& path) {
  // Binary mode keeps the byte stream exactly as written.
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  out.exceptions(std::ios::failbit | std::ios::badbit);
  return out;
}

std::vector<const CellResult*> cells_by_key(std::span<const CellResult> cells) {
  std::vector<const CellResult*> sorted;
  sorted.reserve(cells.size());
  for (const auto& c : cells) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const CellResult* a, const CellResult* b) {
    return std::tuple{a->key.tx_range, a->key.v_max, a->key.static_count} <
           std::tuple{b->key.tx_range, b->key.v_max, b->key.static_count};
  });
  return sorted;
}

std::string coverage_key(std::uint32_t index) {
  return format_double(static_cast<double>(index + 1) / 100.0);
}

void write_run_rows(std::ostream& out, const CellKey& key, std::uint32_t profile,
                    const RunResult& r) {
  std::string prefix;
  prefix += std::to_string(kRunsSchemaVersion);
  prefix += ',';
  prefix += format_double(key.tx_range);
  prefix += ',';
  prefix += format_double(key.v_max);
  prefix += ',';
  prefix += std::to_string(key.static_count);
  prefix += ',';
  prefix += std::to_string(profile);
  prefix += ',';
  prefix += policy_name(r.policy);
  prefix += ',';

  auto row = [&](std::string_view metric, const std::string& key_field, const std::string& value) {
    out << prefix << metric << ',' << key_field << ',' << value << '\n';
  };
  if (r.node_lifetime_s) row("node_lifetime_s", "", format_double(*r.node_lifetime_s));
  if (r.network_lifetime_s) row("network_lifetime_s", "", format_double(*r.network_lifetime_s));
  row("discovery_count", "", std::to_string(r.discovery_count));
  row("rounds_completed", "", std::to_string(r.rounds_completed));
  row("no_tree_rounds", "", std::to_string(r.no_tree_rounds));
  row("rounds_elapsed", "", std::to_string(r.rounds_elapsed));
  for (std::size_t x = 0; x < r.failure_times.size(); ++x) {
    row("failure_time_s", std::to_string(x + 1), format_double(r.failure_times[x]));
  }
  for (std::uint32_t k = 0; k < r.coverage_loss_times.size(); ++k) {
    if (r.coverage_loss_times[k] >= 0.0) {
      row("coverage_loss_time_s", coverage_key(k), format_double(r.coverage_loss_times[k]));
    }
  }
}

json run_to_json(const CellKey& key, std::uint32_t profile, const RunResult& r) {
  json j;
  j["tx_range_m"] = key.tx_range;
  j["v_max_mps"] = key.v_max;
  j["static_nodes"] = key.static_count;
  j["profile"] = profile;
  j["policy"] = policy_name(r.policy);
  j["run_seed"] = r.run_seed;
  j["node_count"] = r.node_count;
  j["round_period_s"] = r.round_period_s;
  j["node_lifetime_s"] = r.node_lifetime_s ? json(*r.node_lifetime_s) : json(nullptr);
  j["network_lifetime_s"] = r.network_lifetime_s ? json(*r.network_lifetime_s) : json(nullptr);
  j["failure_times_s"] = r.failure_times;
  json coverage = json::array();
  for (const double t : r.coverage_loss_times) coverage.push_back(t >= 0.0 ? json(t) : json(nullptr));
  j["coverage_loss_times_s"] = std::move(coverage);
  j["discovery_count"] = r.discovery_count;
  j["rounds_completed"] = r.rounds_completed;
  j["no_tree_rounds"] = r.no_tree_rounds;
  j["rounds_elapsed"] = r.rounds_elapsed;
  j["leaders"] = r.leader_sequence;
  return j;
}

json batch_to_json(const BatchSummary& s) {
  auto or_null = [](double v) { return v >= 0.0 ? json(v) : json(nullptr); };
  json j;
  j["profiles"] = s.profile_count;
  j["node_lifetime_defined"] = s.node_lifetime_count;
  j["mean_node_lifetime_s"] = or_null(s.mean_node_lifetime_s);
  j["network_lifetime_defined"] = s.network_lifetime_count;
  j["mean_network_lifetime_s"] = or_null(s.mean_network_lifetime_s);
  j["mean_discovery_count"] = s.mean_discovery_count;
  j["mean_rounds_completed"] = s.mean_rounds_completed;
  j["mean_failure_time_s"] = s.mean_failure_time_s;
  j["failure_count_probability"] = s.failure_count_probability;
  json cover_means = json::array();
  for (const double t : s.mean_coverage_loss_time_s) cover_means.push_back(or_null(t));
  j["mean_coverage_loss_time_s"] = std::move(cover_means);
  j["coverage_loss_probability"] = s.coverage_loss_probability;
  return j;
}

}  // namespace

void write_runs_csv(const std::filesystem::path& path, std::span<const CellResult> cells) {
  auto out = open_out(path);
  out << kRunsCsvHeader << '\n';
  for (const CellResult* cell : cells_by_key(cells)) {
    for (std::uint32_t p = 0; p < cell->max_stability.size(); ++p) {
      write_run_rows(out, cell->key, p, cell->max_stability[p]);
      write_run_rows(out, cell->key, p, cell->mst_dg[p]);
    }
  }
}

void write_runs_json(const std::filesystem::path& path, std::span<const CellResult> cells) {
  json runs = json::array();
  for (const CellResult* cell : cells_by_key(cells)) {
    for (std::uint32_t p = 0; p < cell->max_stability.size(); ++p) {
      runs.push_back(run_to_json(cell->key, p, cell->max_stability[p]));
      runs.push_back(run_to_json(cell->key, p, cell->mst_dg[p]));
    }
  }
  json doc;
  doc["schema"] = "dgsim-runs";
  doc["version"] = kRunsSchemaVersion;
  doc["runs"] = std::move(runs);
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_summary_csv(const std::filesystem::path& path, std::span<const CellResult> cells) {
  auto out = open_out(path);
  out << kSummaryCsvHeader << '\n';
  for (const CellResult* cell : cells_by_key(cells)) {
    for (const BatchSummary* s : {&cell->max_stability_summary, &cell->mst_dg_summary}) {
      out << kSummarySchemaVersion << ',' << format_double(cell->key.tx_range) << ','
          << format_double(cell->key.v_max) << ',' << cell->key.static_count << ','
          << policy_name(s->policy) << ',' << s->profile_count << ',' << s->node_lifetime_count
          << ',' << (s->mean_node_lifetime_s >= 0.0 ? format_double(s->mean_node_lifetime_s) : "")
          << ',' << s->network_lifetime_count << ','
          << (s->mean_network_lifetime_s >= 0.0 ? format_double(s->mean_network_lifetime_s) : "")
          << ',' << format_double(s->mean_discovery_count) << ','
          << format_double(s->mean_rounds_completed) << '\n';
    }
  }
}

void write_summary_json(const std::filesystem::path& path, std::span<const CellResult> cells) {
  json out_cells = json::array();
  for (const CellResult* cell : cells_by_key(cells)) {
    json c;
    c["tx_range_m"] = cell->key.tx_range;
    c["v_max_mps"] = cell->key.v_max;
    c["static_nodes"] = cell->key.static_count;
    c["policies"] = {{"max-stability", batch_to_json(cell->max_stability_summary)},
                     {"mst-dg", batch_to_json(cell->mst_dg_summary)}};
    out_cells.push_back(std::move(c));
  }
  json doc;
  doc["schema"] = "dgsim-summary";
  doc["version"] = kSummarySchemaVersion;
  doc["cells"] = std::move(out_cells);
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

namespace {

double parse_double_field(std::string_view text, std::size_t line_offset) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError("malformed numeric field '" + std::string(text) + "'", line_offset);
  }
  return value;
}

std::uint64_t parse_uint_field(std::string_view text, std::size_t line_offset) {
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError("malformed integer field '" + std::string(text) + "'", line_offset);
  }
  return value;
}

// Accumulates one run's rows until all cells are assembled.
struct RunAccum {
  RunResult result;
  std::vector<std::pair<std::uint32_t, double>> failures;
  bool seen = false;
};

using CellMapKey = std::tuple<double, double, std::uint32_t>;
using ProfileKey = std::pair<std::uint32_t, Policy>;

std::vector<CellResult> assemble_cells(
    std::map<CellMapKey, std::map<ProfileKey, RunAccum>>&& grouped) {
  std::vector<CellResult> cells;
  for (auto& [key, runs] : grouped) {
    CellResult cell;
    cell.key = {std::get<0>(key), std::get<1>(key), std::get<2>(key)};
    std::uint32_t max_profile = 0;
    for (const auto& [pk, accum] : runs) max_profile = std::max(max_profile, pk.first);
    cell.max_stability.resize(max_profile + 1);
    cell.mst_dg.resize(max_profile + 1);
    std::vector<char> seen_max(max_profile + 1, 0);
    std::vector<char> seen_mst(max_profile + 1, 0);
    for (auto& [pk, accum] : runs) {
      RunResult& r = accum.result;
      std::sort(accum.failures.begin(), accum.failures.end());
      r.failure_times.clear();
      for (const auto& [x, t] : accum.failures) r.failure_times.push_back(t);
      if (!r.node_lifetime_s && !r.failure_times.empty()) {
        r.node_lifetime_s = r.failure_times.front();
      }
      if (pk.second == Policy::MaxStability) {
        cell.max_stability[pk.first] = std::move(r);
        seen_max[pk.first] = 1;
      } else {
        cell.mst_dg[pk.first] = std::move(r);
        seen_mst[pk.first] = 1;
      }
    }
    for (std::uint32_t p = 0; p <= max_profile; ++p) {
      if (!seen_max[p] || !seen_mst[p]) {
        throw ParseError("runs file lacks both policies for profile " + std::to_string(p), 0);
      }
    }
    cell.max_stability_summary = aggregate_batch(cell.max_stability);
    cell.mst_dg_summary = aggregate_batch(cell.mst_dg);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<CellResult> read_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string() + " for reading");

  std::map<CellMapKey, std::map<ProfileKey, RunAccum>> grouped;
  std::string line;
  std::size_t offset = 0;
  bool first = true;
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (first) {
      first = false;
      if (line != kRunsCsvHeader) throw ParseError("unrecognized runs CSV header", 0);
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      if (comma == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 9) throw ParseError("runs CSV row does not have 9 fields", line_offset);
    if (parse_uint_field(fields[0], line_offset) != kRunsSchemaVersion) {
      throw ParseError("unsupported runs schema version", line_offset);
    }

    const CellMapKey key{parse_double_field(fields[1], line_offset),
                         parse_double_field(fields[2], line_offset),
                         static_cast<std::uint32_t>(parse_uint_field(fields[3], line_offset))};
    const auto profile = static_cast<std::uint32_t>(parse_uint_field(fields[4], line_offset));
    const auto policy = parse_policy(fields[5]);
    if (!policy) throw ParseError("unknown policy '" + std::string(fields[5]) + "'", line_offset);

    RunAccum& accum = grouped[key][{profile, *policy}];
    if (!accum.seen) {
      accum.seen = true;
      accum.result.policy = *policy;
      accum.result.coverage_loss_times.assign(kCoverageTargets, -1.0);
    }
    RunResult& r = accum.result;

    const std::string_view metric = fields[6];
    const std::string_view key_field = fields[7];
    const std::string_view value = fields[8];
    if (metric == "node_lifetime_s") {
      r.node_lifetime_s = parse_double_field(value, line_offset);
    } else if (metric == "network_lifetime_s") {
      r.network_lifetime_s = parse_double_field(value, line_offset);
    } else if (metric == "discovery_count") {
      r.discovery_count = static_cast<std::uint32_t>(parse_uint_field(value, line_offset));
    } else if (metric == "rounds_completed") {
      r.rounds_completed = static_cast<std::uint32_t>(parse_uint_field(value, line_offset));
    } else if (metric == "no_tree_rounds") {
      r.no_tree_rounds = static_cast<std::uint32_t>(parse_uint_field(value, line_offset));
    } else if (metric == "rounds_elapsed") {
      r.rounds_elapsed = static_cast<std::uint32_t>(parse_uint_field(value, line_offset));
    } else if (metric == "failure_time_s") {
      const auto x = static_cast<std::uint32_t>(parse_uint_field(key_field, line_offset));
      if (x == 0) throw ParseError("failure_time_s key must be >= 1", line_offset);
      accum.failures.emplace_back(x, parse_double_field(value, line_offset));
    } else if (metric == "coverage_loss_time_s") {
      const double fraction = parse_double_field(key_field, line_offset);
      const auto k = static_cast<std::int64_t>(std::llround(fraction * 100.0)) - 1;
      if (k < 0 || k >= kCoverageTargets) {
        throw ParseError("coverage_loss_time_s key outside (0,1]", line_offset);
      }
      r.coverage_loss_times[static_cast<std::size_t>(k)] =
          parse_double_field(value, line_offset);
    } else {
      throw ParseError("unknown metric '" + std::string(metric) + "'", line_offset);
    }
  }
  return assemble_cells(std::move(grouped));
}

std::vector<CellResult> read_runs_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string() + " for reading");

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  try {
    if (doc.at("schema") != "dgsim-runs" || doc.at("version") != kRunsSchemaVersion) {
      throw ParseError("unsupported runs JSON schema", 0);
    }
    std::map<CellMapKey, std::map<ProfileKey, RunAccum>> grouped;
    for (const json& jr : doc.at("runs")) {
      const CellMapKey key{jr.at("tx_range_m").get<double>(), jr.at("v_max_mps").get<double>(),
                           jr.at("static_nodes").get<std::uint32_t>()};
      const auto profile = jr.at("profile").get<std::uint32_t>();
      const auto policy = parse_policy(jr.at("policy").get<std::string>());
      if (!policy) throw ParseError("unknown policy in runs JSON", 0);

      RunAccum& accum = grouped[key][{profile, *policy}];
      accum.seen = true;
      RunResult& r = accum.result;
      r.policy = *policy;
      r.run_seed = jr.at("run_seed").get<std::uint64_t>();
      r.node_count = jr.at("node_count").get<std::uint32_t>();
      r.round_period_s = jr.at("round_period_s").get<double>();
      if (!jr.at("node_lifetime_s").is_null()) {
        r.node_lifetime_s = jr.at("node_lifetime_s").get<double>();
      }
      if (!jr.at("network_lifetime_s").is_null()) {
        r.network_lifetime_s = jr.at("network_lifetime_s").get<double>();
      }
      const auto& times = jr.at("failure_times_s");
      for (std::size_t x = 0; x < times.size(); ++x) {
        accum.failures.emplace_back(static_cast<std::uint32_t>(x + 1), times[x].get<double>());
      }
      r.coverage_loss_times.assign(kCoverageTargets, -1.0);
      const auto& coverage = jr.at("coverage_loss_times_s");
      for (std::size_t k = 0; k < coverage.size() && k < kCoverageTargets; ++k) {
        if (!coverage[k].is_null()) r.coverage_loss_times[k] = coverage[k].get<double>();
      }
      r.discovery_count = jr.at("discovery_count").get<std::uint32_t>();
      r.rounds_completed = jr.at("rounds_completed").get<std::uint32_t>();
      r.no_tree_rounds = jr.at("no_tree_rounds").get<std::uint32_t>();
      r.rounds_elapsed = jr.at("rounds_elapsed").get<std::uint32_t>();
      r.leader_sequence = jr.at("leaders").get<std::vector<NodeId>>();
    }
    return assemble_cells(std::move(grouped));
  } catch (const json::exception& e) {
    throw ParseError(e.what(), 0);
  }
}

}  // namespace

std::vector<CellResult> read_runs(const std::filesystem::path& path) {
  if (path.extension() == ".json") return read_runs_json(path);
  return read_runs_csv(path);
}

std::vector<ReportCell> common_timeline_report(std::span<const CellResult> cells) {
  std::vector<ReportCell> report;
  report.reserve(cells.size());
  for (const CellResult* cell : cells_by_key(cells)) {
    ReportCell rc;
    rc.key = cell->key;
    rc.max_stability.coverage_loss_probability_common.assign(kCoverageTargets, 0.0);
    rc.max_stability.mean_coverage_loss_time_common_s.assign(kCoverageTargets, -1.0);
    rc.mst_dg = rc.max_stability;

    std::vector<double> sum_max(kCoverageTargets, 0.0), sum_mst(kCoverageTargets, 0.0);
    std::vector<std::uint32_t> n_max(kCoverageTargets, 0), n_mst(kCoverageTargets, 0);
    double lifetime_sum = 0.0;

    const std::size_t profiles = std::min(cell->max_stability.size(), cell->mst_dg.size());
    for (std::size_t p = 0; p < profiles; ++p) {
      const RunResult& a = cell->max_stability[p];
      const RunResult& b = cell->mst_dg[p];
      if (!a.network_lifetime_s || !b.network_lifetime_s) continue;
      const double common = std::min(*a.network_lifetime_s, *b.network_lifetime_s);
      ++rc.common_profiles;
      lifetime_sum += common;
      for (std::uint32_t k = 0; k < kCoverageTargets; ++k) {
        const double ta = a.coverage_loss_times[k];
        if (ta >= 0.0 && ta <= common) {
          sum_max[k] += ta;
          ++n_max[k];
        }
        const double tb = b.coverage_loss_times[k];
        if (tb >= 0.0 && tb <= common) {
          sum_mst[k] += tb;
          ++n_mst[k];
        }
      }
    }
    if (rc.common_profiles > 0) {
      rc.mean_common_network_lifetime_s = lifetime_sum / rc.common_profiles;
      for (std::uint32_t k = 0; k < kCoverageTargets; ++k) {
        rc.max_stability.coverage_loss_probability_common[k] =
            static_cast<double>(n_max[k]) / rc.common_profiles;
        rc.mst_dg.coverage_loss_probability_common[k] =
            static_cast<double>(n_mst[k]) / rc.common_profiles;
        if (n_max[k] > 0) {
          rc.max_stability.mean_coverage_loss_time_common_s[k] = sum_max[k] / n_max[k];
        }
        if (n_mst[k] > 0) rc.mst_dg.mean_coverage_loss_time_common_s[k] = sum_mst[k] / n_mst[k];
      }
    }
    report.push_back(std::move(rc));
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, std::span<const ReportCell> cells) {
  auto out = open_out(path);
  out << kReportCsvHeader << '\n';
  for (const ReportCell& cell : cells) {
    std::string cell_prefix;
    cell_prefix += std::to_string(kReportSchemaVersion);
    cell_prefix += ',';
    cell_prefix += format_double(cell.key.tx_range);
    cell_prefix += ',';
    cell_prefix += format_double(cell.key.v_max);
    cell_prefix += ',';
    cell_prefix += std::to_string(cell.key.static_count);
    cell_prefix += ',';

    // Cell-level metrics carry an empty policy field.
    out << cell_prefix << ",common_profiles,," << cell.common_profiles << '\n';
    if (cell.mean_common_network_lifetime_s >= 0.0) {
      out << cell_prefix << ",mean_common_network_lifetime_s,,"
          << format_double(cell.mean_common_network_lifetime_s) << '\n';
    }
    const std::pair<Policy, const ReportPolicy*> sides[] = {
        {Policy::MaxStability, &cell.max_stability}, {Policy::MstDg, &cell.mst_dg}};
    for (const auto& [policy, side] : sides) {
      for (std::uint32_t k = 0; k < kCoverageTargets; ++k) {
        out << cell_prefix << policy_name(policy) << ",coverage_loss_probability_common,"
            << coverage_key(k) << ',' << format_double(side->coverage_loss_probability_common[k])
            << '\n';
        if (side->mean_coverage_loss_time_common_s[k] >= 0.0) {
          out << cell_prefix << policy_name(policy) << ",mean_coverage_loss_time_common_s,"
              << coverage_key(k) << ','
              << format_double(side->mean_coverage_loss_time_common_s[k]) << '\n';
        }
      }
    }
  }
}

void write_report_json(const std::filesystem::path& path, std::span<const ReportCell> cells) {
  auto or_null = [](double v) { return v >= 0.0 ? json(v) : json(nullptr); };
  auto side_to_json = [&](const ReportPolicy& side) {
    json j;
    j["coverage_loss_probability_common"] = side.coverage_loss_probability_common;
    json means = json::array();
    for (const double t : side.mean_coverage_loss_time_common_s) means.push_back(or_null(t));
    j["mean_coverage_loss_time_common_s"] = std::move(means);
    return j;
  };
  json out_cells = json::array();
  for (const ReportCell& cell : cells) {
    json c;
    c["tx_range_m"] = cell.key.tx_range;
    c["v_max_mps"] = cell.key.v_max;
    c["static_nodes"] = cell.key.static_count;
    c["common_profiles"] = cell.common_profiles;
    c["mean_common_network_lifetime_s"] = or_null(cell.mean_common_network_lifetime_s);
    c["policies"] = {{"max-stability", side_to_json(cell.max_stability)},
                     {"mst-dg", side_to_json(cell.mst_dg)}};
    out_cells.push_back(std::move(c));
  }
  json doc;
  doc["schema"] = "dgsim-report";
  doc["version"] = kReportSchemaVersion;
  doc["cells"] = std::move(out_cells);
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
}

void write_trace_header(std::ostream& out) {
  out << "# dgsim-tree-trace v1\n";
}

void write_tree_record(std::ostream& out, Policy policy, const TreeRecord& record) {
  out << policy_name(policy) << ' ' << record.start << ' ' << record.end << ' ' << record.leader;
  for (const auto& e : record.edges) {
    out << ' ' << e.u << '-' << e.v << ':' << format_double(e.weight);
  }
  out << '\n';
}

}  // namespace dgsim
