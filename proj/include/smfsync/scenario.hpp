#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smfsync/config.hpp"

namespace smfsync::scenario {

/// Containment is checked as quadratic form <= 1 + this.
inline constexpr double kContainmentTol = 1e-6;

/// Summary of one run. Metrics are kept in insertion order so the CSV layout
/// is stable.
struct MetricsReport {
  std::string scenario;
  Eigen::Index horizon = 0;
  std::uint64_t seed = 0;
  std::uint64_t violations = 0;  // containment failures, must be 0
  std::vector<std::pair<std::string, double>> metrics;

  void set(const std::string& name, double value);
  std::optional<double> get(const std::string& name) const;
  /// Throws std::out_of_range for an unknown metric.
  double at(const std::string& name) const;
};

/// Runs the scenario and, when `out_dir` is given, writes metrics.csv,
/// trace_agent_<i>.csv, and (multi-agent only) global.csv and design.csv.
/// Filter failures surface as smf::FilterError or sync::AgentError.
MetricsReport run_scenario(const ScenarioConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {});

/// Reads metrics.csv back from a run directory; the scenario name is the
/// directory name.
MetricsReport read_metrics(const std::filesystem::path& dir);

struct Comparison {
  std::vector<std::string> runs;     // column names
  std::vector<std::string> metrics;  // row names, union in first-seen order
  std::vector<std::vector<std::optional<double>>> values;  // [metric][run]
};

/// Needs at least two reports with equal horizons (HorizonMismatch otherwise).
Comparison compare_runs(const std::vector<MetricsReport>& reports);
void write_comparison_csv(const Comparison& c, const std::filesystem::path& file);
std::string format_comparison(const Comparison& c);

/// Lossless decimal form used in every CSV.
std::string format_double(double v);

}  // namespace smfsync::scenario
