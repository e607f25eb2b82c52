#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smfsync/graph.hpp"
#include "smfsync/parallel.hpp"
#include "smfsync/riccati.hpp"
#include "smfsync/sdp.hpp"
#include "smfsync/sync.hpp"
#include "smfsync/system.hpp"

/// Scenario configuration: YAML ingestion, validation and the built-in
/// presets. The grammar is documented in docs/config.md.
namespace smfsync::scenario {

enum class Mode { SingleFilter, MultiAgent };

enum class TolProfile { Strict, Default, Loose };

std::string to_string(Mode m);
std::string to_string(TolProfile t);
TolProfile parse_tol_profile(const std::string& s);
sdp::Options solver_options(TolProfile t);

/// Either the Mathieu oscillator (discretized internally) or explicit
/// time-invariant matrices.
struct SystemSpec {
  std::optional<MathieuParams> mathieu;
  Mat a, b, c, d, g;
  double dt = 1.0;  // sampling period; maps step k to time k dt
};

struct FilterSpec {
  Vec x0;          // true initial state
  Ellipsoid init;  // E(xhat_0, P_0)
  SpdMat q, r;
  DisturbanceSpec w, v;
};

struct DesignSpec {
  SpdMat q;  // Riccati weight
  double c0, r0;
  std::optional<riccati::DecayCertificate> certificate;
};

/// Overrides for the bound constants; unset values come from the agents.
struct BoundSpec {
  std::optional<double> p0, qbar, rbar;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Mode mode = Mode::SingleFilter;
  Eigen::Index horizon = 0;
  std::uint64_t seed = 0;
  std::string output;  // empty: no files written unless the caller supplies a directory
  TolProfile tol = TolProfile::Default;
  Execution execution = Execution::Serial;
  SystemSpec system;
  // single-filter
  std::optional<FilterSpec> filter;
  // multi-agent
  Vec leader;
  std::vector<sync::AgentSetup> agents;
  std::optional<graph::InteractionGraph> graph;
  std::optional<DesignSpec> design;
  BoundSpec bounds;
};

/// Reads and validates a YAML config. ParseError carries the line;
/// ValidationError lists every violated constraint, one per line.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<string>");

/// Cross-field checks that need the assembled config (initial containment,
/// graph assumptions, circle condition). Throws ValidationError.
void validate(const ScenarioConfig& cfg);

/// Built-in scenarios: "example1" (Mathieu filter) and "example2" (four
/// agents). `setting` picks the disturbance row of the multi-agent study
/// (1: 0.05, 2: 0.5, 3: 1.0).
ScenarioConfig preset(const std::string& name, int setting = 1);

}  // namespace smfsync::scenario
