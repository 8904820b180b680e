#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dgsim/engine.hpp"
#include "dgsim/gatherers.hpp"
#include "dgsim/metrics.hpp"

namespace dgsim {

// Result files come in two shapes, both versioned:
//  - runs ("dgsim-runs" v1): one row/object per profile per metric, the
//    durable record a later `report` invocation post-processes;
//  - summary ("dgsim-summary" v1): one row/object per cell per policy.
// CSV rows are ordered by cell values (not list positions), profile, policy,
// metric, key, so identical experiments serialize byte-identically no matter
// how the grid was enumerated.
inline constexpr int kRunsSchemaVersion = 1;
inline constexpr int kSummarySchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

void write_runs_csv(const std::filesystem::path& path, std::span<const CellResult> cells);
void write_runs_json(const std::filesystem::path& path, std::span<const CellResult> cells);
void write_summary_csv(const std::filesystem::path& path, std::span<const CellResult> cells);
void write_summary_json(const std::filesystem::path& path, std::span<const CellResult> cells);

// Reads a runs file back (CSV or JSON decided by extension). Batch summaries
// are recomputed from the runs. Throws ParseError on malformed content.
std::vector<CellResult> read_runs(const std::filesystem::path& path);

// Fair-comparison post-processing: for every profile where both policies
// measured a network lifetime, metrics are cut off at the smaller of the
// two ("common") lifetimes.
struct ReportPolicy {
  std::vector<double> coverage_loss_probability_common;  // kCoverageTargets entries
  std::vector<double> mean_coverage_loss_time_common_s;  // -1 when never hit in time
};

struct ReportCell {
  CellKey key;
  std::uint32_t common_profiles = 0;
  double mean_common_network_lifetime_s = -1.0;
  ReportPolicy max_stability;
  ReportPolicy mst_dg;
};

std::vector<ReportCell> common_timeline_report(std::span<const CellResult> cells);

void write_report_csv(const std::filesystem::path& path, std::span<const ReportCell> cells);
void write_report_json(const std::filesystem::path& path, std::span<const ReportCell> cells);

// Line-oriented tree trace ("dgsim-tree-trace" v1): a header line, then one
// line per closed window: policy, start, end, leader, then u-v:weight terms.
void write_trace_header(std::ostream& out);
void write_tree_record(std::ostream& out, Policy policy, const TreeRecord& record);

}  // namespace dgsim
