// smfsim: run, validate and compare filter / synchronization scenarios.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "smfsync/errors.hpp"
#include "smfsync/scenario.hpp"
#include "smfsync/sync.hpp"

namespace fs = std::filesystem;
using namespace smfsync;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> horizon;
  std::string out;
  std::string tol;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--horizon", o.horizon, "final step T_f")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "output directory for CSV files");
  cmd->add_option("--tol-profile", o.tol, "SDP tolerances")->check(CLI::IsMember({"strict", "default", "loose"}));
}

int execute(scenario::ScenarioConfig cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (!o.tol.empty()) cfg.tol = scenario::parse_tol_profile(o.tol);
  std::string out = !o.out.empty() ? o.out : cfg.output;
  if (out.empty()) out = "runs/" + cfg.name;
  const scenario::MetricsReport r = scenario::run_scenario(cfg, fs::path(out));
  std::cout << "scenario " << r.scenario << " (" << scenario::to_string(cfg.mode) << ", T_f = " << r.horizon
            << ", seed " << r.seed << ") -> " << out << "\n";
  for (const auto& [k, v] : r.metrics) std::cout << "  " << k << " = " << scenario::format_double(v) << "\n";
  std::cout << "  containment violations = " << r.violations << "\n";
  return r.violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-membership filtering and leader-follower synchronization simulator"};
  app.require_subcommand(1);

  Overrides run_o, preset_o;
  std::string config_path, preset_name, validate_path, compare_out;
  int setting = 1;
  std::vector<std::string> dirs;

  CLI::App* run = app.add_subcommand("run", "run a YAML scenario");
  run->add_option("config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
  add_overrides(run, run_o);

  CLI::App* pre = app.add_subcommand("preset", "run a built-in scenario");
  pre->add_option("name", preset_name, "example1 | example2")->required()->check(CLI::IsMember({"example1", "example2"}));
  pre->add_option("--setting", setting, "example2 disturbance setting (1-3)")->check(CLI::Range(1, 3));
  add_overrides(pre, preset_o);

  CLI::App* cmp = app.add_subcommand("compare", "tabulate metrics of several run directories");
  cmp->add_option("dirs", dirs, "run directories")->required()->expected(1, -1);
  cmp->add_option("--out", compare_out, "write the table as CSV");

  CLI::App* val = app.add_subcommand("validate", "check a scenario file without running it");
  val->add_option("config", validate_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return execute(scenario::load_config(config_path), run_o);
    if (*pre) return execute(scenario::preset(preset_name, setting), preset_o);
    if (*val) {
      const scenario::ScenarioConfig cfg = scenario::load_config(validate_path);
      std::cout << validate_path << ": ok (" << scenario::to_string(cfg.mode) << ", T_f = " << cfg.horizon << ")\n";
      return 0;
    }
    if (*cmp) {
      std::vector<scenario::MetricsReport> reports;
      for (const std::string& d : dirs) reports.push_back(scenario::read_metrics(d));
      const scenario::Comparison c = scenario::compare_runs(reports);
      std::cout << scenario::format_comparison(c);
      if (!compare_out.empty()) scenario::write_comparison_csv(c, compare_out);
      return 0;
    }
  } catch (const sync::AgentError& e) {
    std::cerr << "error: " << e.what() << " (agent " << e.agent() + 1 << ", step " << e.step() << ")\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration:\n" << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
