// Command-line front end. Subcommands cover the whole workflow:
//   gen-profiles  write mobility profiles to files for later reuse
//   run           simulate one profile (one policy or both)
//   grid          sweep the experiment cross product
//   report        post-process a runs file into the fair-comparison report
//   dump-graph    edge-list dump of a snapshot or window intersection
//
// Errors leave one machine-readable JSON line on stderr and a nonzero exit:
//   2 usage or configuration, 3 malformed or invalid input, 4 I/O,
//   1 anything else.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dgsim/engine.hpp>
#include <dgsim/errors.hpp>
#include <dgsim/format.hpp>
#include <dgsim/metrics.hpp>
#include <dgsim/mobility.hpp>
#include <dgsim/reporting.hpp>
#include <dgsim/topology.hpp>

namespace {

using namespace dgsim;

int fail(const char* category, const std::string& message, int code) {
  const nlohmann::json line{{"error", category}, {"message", message}};
  std::cerr << line.dump() << "\n";
  return code;
}

Round rounds_from_seconds(double horizon_s, double period) {
  if (horizon_s <= 0.0) throw ConfigError("--horizon-s must be positive");
  const auto rounds = static_cast<Round>(std::llround(horizon_s / period));
  if (rounds < 1) throw ConfigError("--horizon-s is shorter than one round");
  return rounds;
}

Policy parse_policy(const std::string& name) {
  if (name == "max-stability") return Policy::MaxStability;
  if (name == "mst-dg") return Policy::MstDg;
  throw ConfigError("unknown policy: " + name);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
  return out;
}

// Options shared by `run` and `grid`.
struct CommonOpts {
  std::uint32_t nodes = 100;
  double horizon_s = 6000.0;
  std::uint64_t seed = 0;
  double initial_energy = 2.0;
  bool sufficient_energy = false;
  bool fixed_probes = false;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool out_required) {
  cmd->add_option("--nodes", opts.nodes, "Sensor count")->capture_default_str();
  cmd->add_option("--horizon-s", opts.horizon_s, "Simulated horizon in seconds")
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Base seed; everything derives from it")
      ->capture_default_str();
  cmd->add_option("--initial-energy", opts.initial_energy, "Per-node battery in joules")
      ->capture_default_str();
  cmd->add_flag("--sufficient-energy", opts.sufficient_energy,
                "Battery too large to drain: isolates topology effects");
  cmd->add_flag("--fixed-probes", opts.fixed_probes,
                "Sample the coverage probe points once per run instead of per round");
  auto* out_opt = cmd->add_option("--out", opts.out, "Results file to write");
  if (out_required) out_opt->required();
  cmd->add_option("--format", opts.format, "Results encoding")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

void write_results(const std::filesystem::path& path, const std::string& format,
                   std::span<const CellResult> cells) {
  if (format == "json") {
    write_runs_json(path, cells);
  } else {
    write_runs_csv(path, cells);
  }
}

// ---------------------------------------------------------------------------
// gen-profiles

struct GenOpts {
  std::uint32_t nodes = 100;
  double v_max = 3.0;
  std::uint32_t static_nodes = 0;
  std::uint32_t profiles = 20;
  std::uint64_t seed = 0;
  double horizon_s = 6000.0;
  std::string out = ".";
  std::string profile_format = "binary";
};

int cmd_gen_profiles(const GenOpts& opts) {
  FieldConfig field;
  MobilityConfig mob;
  mob.node_count = opts.nodes;
  mob.static_count = opts.static_nodes;
  mob.v_max = opts.v_max;
  mob.horizon_rounds = rounds_from_seconds(opts.horizon_s, mob.round_period);
  validate(mob);

  const auto format =
      opts.profile_format == "json" ? ProfileFormat::Json : ProfileFormat::Binary;
  const char* extension = format == ProfileFormat::Json ? ".json" : ".dgmp";

  std::filesystem::create_directories(opts.out);
  for (std::uint32_t k = 0; k < opts.profiles; ++k) {
    // Same derivation the grid uses, so these files line up with grid cells
    // of the same base seed.
    mob.seed = profile_seed(opts.seed, opts.v_max, opts.static_nodes, k);
    const auto profile = generate_profile(field, mob);

    char name[32];
    std::snprintf(name, sizeof name, "profile-%04u%s", k, extension);
    const auto path = std::filesystem::path(opts.out) / name;
    profile.save(path, format);
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunOpts {
  CommonOpts common;
  double tx_range = 25.0;
  double v_max = 3.0;
  std::uint32_t static_nodes = 0;
  std::string policy = "both";
  std::string profile_file;
  std::string tree_trace;
  std::string energy_csv;
};

int cmd_run(const RunOpts& opts) {
  SimConfig cfg;
  cfg.tx_range = opts.tx_range;
  cfg.energy.initial_energy = opts.common.initial_energy;
  cfg.sufficient_energy = opts.common.sufficient_energy;
  cfg.fixed_probes = opts.common.fixed_probes;

  std::optional<MobilityProfile> loaded;
  if (!opts.profile_file.empty()) {
    loaded = MobilityProfile::load(opts.profile_file);
    cfg.field = loaded->field();
    cfg.mobility = loaded->config();
    // A profile longer than the requested horizon serves a shorter run.
    const Round wanted = rounds_from_seconds(opts.common.horizon_s, cfg.mobility.round_period);
    cfg.mobility.horizon_rounds = std::min(cfg.mobility.horizon_rounds, wanted);
  } else {
    cfg.mobility.node_count = opts.common.nodes;
    cfg.mobility.static_count = opts.static_nodes;
    cfg.mobility.v_max = opts.v_max;
    cfg.mobility.horizon_rounds =
        rounds_from_seconds(opts.common.horizon_s, cfg.mobility.round_period);
    cfg.mobility.seed = profile_seed(opts.common.seed, opts.v_max, opts.static_nodes, 0);
  }
  // Derive from the resolved parameters so replaying a stored profile gets
  // the same run seed the grid would use for this cell's first profile.
  cfg.run_seed = run_seed_for(opts.common.seed, cfg.tx_range, cfg.mobility.v_max,
                              cfg.mobility.static_count, 0);
  cfg.validate();
  const MobilityProfile profile =
      loaded ? std::move(*loaded) : generate_profile(cfg.field, cfg.mobility);

  std::optional<std::ofstream> trace_out;
  if (!opts.tree_trace.empty()) {
    trace_out = open_out(opts.tree_trace);
    write_trace_header(*trace_out);
  }
  std::optional<std::ofstream> energy_out;
  if (!opts.energy_csv.empty()) {
    energy_out = open_out(opts.energy_csv);
    *energy_out << "policy,round,time_s,node,residual_j\n";
  }

  std::vector<Policy> policies;
  if (opts.policy == "both") {
    policies = {Policy::MaxStability, Policy::MstDg};
  } else {
    policies = {parse_policy(opts.policy)};
  }

  CellResult cell;
  cell.key = {opts.tx_range, cfg.mobility.v_max, cfg.mobility.static_count};
  for (const Policy policy : policies) {
    cfg.policy = policy;
    TreeTraceSink trace;
    if (trace_out)
      trace = [&](const TreeRecord& rec) { write_tree_record(*trace_out, policy, rec); };
    RoundObserver observer;
    if (energy_out) {
      observer = [&](Round r, double time_s, const EnergyLedger& ledger) {
        for (NodeId id = 0; id < ledger.node_count(); ++id)
          *energy_out << policy_name(policy) << ',' << r << ',' << format_double(time_s) << ','
                      << id << ',' << format_double(ledger.residual(id)) << "\n";
      };
    }
    auto result = run_simulation(cfg, profile, std::move(trace), std::move(observer));
    auto& batch = policy == Policy::MaxStability ? cell.max_stability : cell.mst_dg;
    batch.push_back(std::move(result));
  }
  if (!cell.max_stability.empty())
    cell.max_stability_summary = aggregate_batch(cell.max_stability);
  if (!cell.mst_dg.empty()) cell.mst_dg_summary = aggregate_batch(cell.mst_dg);

  for (const Policy policy : policies) {
    const auto& batch = policy == Policy::MaxStability ? cell.max_stability : cell.mst_dg;
    const auto& r = batch.front();
    std::cout << policy_name(policy) << ": rounds=" << r.rounds_elapsed
              << " gathered=" << r.rounds_completed << " discoveries=" << r.discovery_count;
    if (r.node_lifetime_s) std::cout << " node_lifetime_s=" << format_double(*r.node_lifetime_s);
    if (r.network_lifetime_s)
      std::cout << " network_lifetime_s=" << format_double(*r.network_lifetime_s);
    std::cout << "\n";
  }

  if (!opts.common.out.empty()) {
    std::vector<CellResult> cells;
    cells.push_back(std::move(cell));
    write_results(opts.common.out, opts.common.format, cells);
    std::cout << "wrote " << opts.common.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// grid

struct GridOpts {
  CommonOpts common;
  std::vector<double> tx_ranges{25.0, 40.0};
  std::vector<double> v_maxes{3.0, 10.0, 20.0};
  std::vector<std::uint32_t> static_counts{0, 20, 50, 80};
  std::uint32_t profiles = 20;
  unsigned threads = 1;
  std::string summary_out;
};

int cmd_grid(const GridOpts& opts) {
  ExperimentGrid grid;
  grid.tx_ranges = opts.tx_ranges;
  grid.v_maxes = opts.v_maxes;
  grid.static_counts = opts.static_counts;
  grid.profiles_per_cell = opts.profiles;
  grid.base_seed = opts.common.seed;
  grid.base.mobility.node_count = opts.common.nodes;
  grid.base.mobility.horizon_rounds =
      rounds_from_seconds(opts.common.horizon_s, grid.base.mobility.round_period);
  grid.base.energy.initial_energy = opts.common.initial_energy;
  grid.base.sufficient_energy = opts.common.sufficient_energy;
  grid.base.fixed_probes = opts.common.fixed_probes;
  grid.validate();

  const auto cells = run_grid(grid, opts.threads);
  write_results(opts.common.out, opts.common.format, cells);
  std::cout << "wrote " << opts.common.out << " (" << cells.size() << " cells, "
            << opts.profiles << " profiles each)\n";

  if (!opts.summary_out.empty()) {
    if (opts.common.format == "json") {
      write_summary_json(opts.summary_out, cells);
    } else {
      write_summary_csv(opts.summary_out, cells);
    }
    std::cout << "wrote " << opts.summary_out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// dump-graph

struct DumpOpts {
  std::string profile_file;
  double tx_range = 25.0;
  std::uint64_t round = 0;
  std::uint64_t end_round = 0;
  std::string out;
};

int cmd_dump_graph(const DumpOpts& opts) {
  const auto profile = MobilityProfile::load(opts.profile_file);
  const auto last = opts.end_round == 0 ? opts.round : opts.end_round;
  if (opts.round >= profile.horizon_rounds() || last >= profile.horizon_rounds() ||
      last < opts.round)
    throw ConfigError("--round/--end-round outside the profile horizon");

  const NodeSet live = NodeSet::full(profile.node_count());
  const auto first = static_cast<Round>(opts.round);
  auto window = MobileGraph::from_static(
      StaticGraph::build(profile.row(first), live, opts.tx_range, first));
  for (Round r = first + 1; r <= static_cast<Round>(last); ++r)
    window = intersect_extend(std::move(window),
                              StaticGraph::build(profile.row(r), live, opts.tx_range, r));

  if (opts.out.empty()) {
    dump_edges(std::cout, window);
  } else {
    auto out = open_out(opts.out);
    dump_edges(out, window);
    std::cout << "wrote " << opts.out << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::string in;
  std::string out;
  std::string format = "csv";
  std::string summary_out;
};

int cmd_report(const ReportOpts& opts) {
  const auto cells = read_runs(opts.in);
  const auto report = common_timeline_report(cells);
  if (opts.format == "json") {
    write_report_json(opts.out, report);
  } else {
    write_report_csv(opts.out, report);
  }
  std::cout << "wrote " << opts.out << " (" << report.size() << " cells)\n";

  if (!opts.summary_out.empty()) {
    if (opts.format == "json") {
      write_summary_json(opts.summary_out, cells);
    } else {
      write_summary_csv(opts.summary_out, cells);
    }
    std::cout << "wrote " << opts.summary_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic data-gathering simulator for mobile wireless sensor networks"};
  app.require_subcommand(1);
  // `dgsim --config f.ini <subcommand>`: INI keys live in a section named
  // after the subcommand. The flag must precede the subcommand.
  app.set_config("--config", "", "Read options from an INI file (sections per subcommand)");

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-profiles", "Generate mobility profiles as files");
  gen_cmd->add_option("--nodes", gen.nodes, "Sensor count")->capture_default_str();
  gen_cmd->add_option("--vmax", gen.v_max, "Maximum node speed in m/s")->capture_default_str();
  gen_cmd->add_option("--static-nodes", gen.static_nodes, "Nodes that never move")
      ->capture_default_str();
  gen_cmd->add_option("--profiles", gen.profiles, "How many profiles to generate")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
  gen_cmd->add_option("--horizon-s", gen.horizon_s, "Horizon in seconds")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();
  gen_cmd->add_option("--profile-format", gen.profile_format, "File encoding")
      ->check(CLI::IsMember({"binary", "json"}))
      ->capture_default_str();

  RunOpts run;
  auto* run_cmd = app.add_subcommand("run", "Simulate one mobility profile");
  add_common(run_cmd, run.common, false);
  run_cmd->add_option("--tx-range", run.tx_range, "Radio range in meters")
      ->capture_default_str();
  run_cmd->add_option("--vmax", run.v_max, "Maximum node speed in m/s")->capture_default_str();
  run_cmd->add_option("--static-nodes", run.static_nodes, "Nodes that never move")
      ->capture_default_str();
  run_cmd->add_option("--policy", run.policy, "Gathering policy")
      ->check(CLI::IsMember({"max-stability", "mst-dg", "both"}))
      ->capture_default_str();
  run_cmd->add_option("--profile-file", run.profile_file,
                      "Replay this profile instead of generating one");
  run_cmd->add_option("--tree-trace", run.tree_trace, "Write the tree sequence to this file");
  run_cmd->add_option("--energy-csv", run.energy_csv,
                      "Write per-round node residuals to this CSV");

  GridOpts grid;
  auto* grid_cmd = app.add_subcommand("grid", "Sweep the experiment cross product");
  add_common(grid_cmd, grid.common, true);
  grid_cmd->add_option("--tx-range", grid.tx_ranges, "Radio ranges in meters")
      ->delimiter(',')
      ->capture_default_str();
  grid_cmd->add_option("--vmax", grid.v_maxes, "Maximum speeds in m/s")
      ->delimiter(',')
      ->capture_default_str();
  grid_cmd->add_option("--static-nodes", grid.static_counts, "Static-node counts")
      ->delimiter(',')
      ->capture_default_str();
  grid_cmd->add_option("--profiles", grid.profiles, "Profiles per cell")->capture_default_str();
  grid_cmd->add_option("--threads", grid.threads, "Worker threads (results are identical)")
      ->capture_default_str();
  grid_cmd->add_option("--summary-out", grid.summary_out, "Also write the per-cell summary");

  DumpOpts dump;
  auto* dump_cmd = app.add_subcommand(
      "dump-graph", "Write a snapshot or window-intersection edge list for debugging");
  dump_cmd->add_option("--profile-file", dump.profile_file, "Profile to inspect")->required();
  dump_cmd->add_option("--tx-range", dump.tx_range, "Radio range in meters")
      ->capture_default_str();
  dump_cmd->add_option("--round", dump.round, "Snapshot round")->capture_default_str();
  dump_cmd->add_option("--end-round", dump.end_round,
                       "Intersect snapshots from --round through this round");
  dump_cmd->add_option("--out", dump.out, "Output file (default: stdout)");

  ReportOpts report;
  auto* report_cmd =
      app.add_subcommand("report", "Post-process a runs file into the comparison report");
  report_cmd->add_option("--in", report.in, "Runs file (.csv or .json)")->required();
  report_cmd->add_option("--out", report.out, "Report file to write")->required();
  report_cmd->add_option("--format", report.format, "Report encoding")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  report_cmd->add_option("--summary-out", report.summary_out,
                         "Also write the per-cell summary recomputed from the runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), 2);
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_profiles(gen);
    if (run_cmd->parsed()) return cmd_run(run);
    if (grid_cmd->parsed()) return cmd_grid(grid);
    if (dump_cmd->parsed()) return cmd_dump_graph(dump);
    return cmd_report(report);
  } catch (const dgsim::ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const dgsim::ParseError& e) {
    return fail("parse", e.what(), 3);
  } catch (const dgsim::ValidationError& e) {
    return fail("validation", e.what(), 3);
  } catch (const std::ios_base::failure& e) {
    return fail("io", e.what(), 4);
  } catch (const std::filesystem::filesystem_error& e) {
    return fail("io", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
