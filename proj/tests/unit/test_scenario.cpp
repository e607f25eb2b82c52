#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "smfsync/errors.hpp"
#include "smfsync/scenario.hpp"

using namespace smfsync;
using namespace smfsync::scenario;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = SMFSYNC_SOURCE_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smfsync_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string validation_message(const std::string& yaml) {
  try {
    parse_config(yaml, "t.yaml");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

const char* kSingle = R"(name: tiny
mode: single-filter
horizon: 5
system:
  A: [[1, 0.1], [0, 1]]
  C: [[1, 0]]
  D: [[1]]
  G: [[0], [1]]
filter:
  x0: [0.1, 0]
  xhat0: [0, 0]
  P0: 1
  Q: 0.01
  R: 0.01
  w: {kind: uniform, half_width: 0.1}
  v: {kind: zero}
)";

}  // namespace

TEST_CASE("presets carry the published parameters") {
  const ScenarioConfig e1 = preset("example1");
  REQUIRE(e1.system.mathieu);
  CHECK(e1.system.mathieu->omega == doctest::Approx(2 * 3.141592653589793));
  CHECK(e1.system.mathieu->omega0 == doctest::Approx(3.141592653589793));
  CHECK(e1.system.mathieu->epsilon == 0.3);
  CHECK(e1.system.mathieu->dt == 0.1);
  CHECK(e1.horizon == 200);
  REQUIRE(e1.filter);
  CHECK(e1.filter->x0 == Eigen::Vector2d(0.5, 0));
  CHECK(e1.filter->init.shape().matrix() == 10.5 * Mat::Identity(2, 2));
  CHECK(e1.filter->q.matrix()(0, 0) == 0.0025);

  const ScenarioConfig e2 = preset("example2", 3);
  CHECK(e2.agents.size() == 4);
  CHECK(e2.agents[0].q.matrix() == 2.0 * Mat::Identity(2, 2));
  CHECK(e2.agents[0].r.matrix()(0, 0) == 1.0);
  CHECK(e2.agents[0].w.half_widths(0) == 1.0);
  CHECK(e2.design->c0 == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(preset("example2", 4), ValidationError);
  CHECK_THROWS_AS(preset("nope"), ValidationError);
}

TEST_CASE("shipped configs match the presets") {
  const ScenarioConfig y1 = load_config((kSource / "configs/example1.yaml").string());
  ScenarioConfig y2 = load_config((kSource / "configs/example2.yaml").string());
  const MetricsReport a = run_scenario(y1), b = run_scenario(preset("example1"));
  CHECK(a.metrics == b.metrics);
  ScenarioConfig p2 = preset("example2");
  p2.horizon = y2.horizon = 10;
  const MetricsReport c = run_scenario(y2), d = run_scenario(p2);
  CHECK(c.metrics == d.metrics);
}

TEST_CASE("parse errors and validation messages") {
  SUBCASE("syntax error reports a line") {
    try {
      parse_config("mode: single-filter\nhorizon: [1,\n", "bad.yaml");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("bad.yaml:") == 0);
    }
  }
  SUBCASE("non-PD P0 names P0 and its line") {
    std::string y = kSingle;
    y.replace(y.find("P0: 1"), 5, "P0: [[1, 2], [2, 1]]");
    const std::string msg = validation_message(y);
    CHECK(msg.find("t.yaml:12: P0 is not positive definite") != std::string::npos);
  }
  SUBCASE("every violation is listed") {
    std::string y = kSingle;
    y.replace(y.find("horizon: 5"), 10, "horizon: -1");
    y.replace(y.find("Q: 0.01"), 7, "Q: -1");
    y += "bogus: 1\n";
    const std::string msg = validation_message(y);
    CHECK(msg.find("horizon must be nonnegative") != std::string::npos);
    CHECK(msg.find("Q is not positive definite") != std::string::npos);
    CHECK(msg.find("unknown key 'bogus'") != std::string::npos);
  }
  SUBCASE("x0 outside the initial ellipsoid") {
    std::string y = kSingle;
    y.replace(y.find("x0: [0.1, 0]"), 12, "x0: [2, 0]");
    CHECK(validation_message(y).find("x0 lies outside") != std::string::npos);
  }
  SUBCASE("dimension mismatch") {
    std::string y = kSingle;
    y.replace(y.find("xhat0: [0, 0]"), 13, "xhat0: [0, 0, 0]");
    CHECK(validation_message(y).find("xhat0 must have 2 entries") != std::string::npos);
  }
  SUBCASE("sinusoid larger than its ellipsoid") {
    std::string y = kSingle;
    y.replace(y.find("{kind: uniform, half_width: 0.1}"), 32, "{kind: sinusoidal, amplitude: 0.2, frequency: pi}");
    CHECK(validation_message(y).find("amplitude exceeds") != std::string::npos);
  }
  SUBCASE("number expressions") {
    std::string y = kSingle;
    y.replace(y.find("P0: 1"), 5, "P0: 2pi/4");
    const ScenarioConfig cfg = parse_config(y);
    CHECK(cfg.filter->init.shape().matrix()(0, 0) == doctest::Approx(3.141592653589793 / 2));
  }
  SUBCASE("multi-agent mode needs a graph") {
    std::string y = slurp(kSource / "configs/example2.yaml");
    const auto at = y.find("graph:");
    y.erase(at, y.find("design:") - at);
    CHECK(validation_message(y).find("missing 'graph'") != std::string::npos);
  }
  SUBCASE("unpinned graph and violated circle condition") {
    std::string y = slurp(kSource / "configs/example2.yaml");
    y.replace(y.find("pinning: [1, 0, 0, 0]"), 21, "pinning: [0, 0, 0, 0]");
    CHECK(validation_message(y).find("not reachable from the leader") != std::string::npos);
    y = slurp(kSource / "configs/example2.yaml");
    y.replace(y.find("r0: 0.6"), 7, "r0: 0.1");
    CHECK(validation_message(y).find("design:") != std::string::npos);
  }
  SUBCASE("automatic circle") {
    std::string y = slurp(kSource / "configs/example2.yaml");
    y.replace(y.find("c0: 2/3\n  r0: 0.6"), 17, "circle: auto");
    y.replace(y.find("alpha: 1.1\n  mu: 0.9"), 20, "");
    const ScenarioConfig cfg = parse_config(y);
    CHECK(cfg.design->c0 == doctest::Approx(0.5423751293).epsilon(1e-8));
    CHECK(cfg.design->r0 / cfg.design->c0 == doctest::Approx(0.8437423789).epsilon(1e-6));
  }
  SUBCASE("Mathieu system is single-filter only") {
    std::string y = slurp(kSource / "configs/example1.yaml");
    y.replace(y.find("mode: single-filter"), 19, "mode: multi-agent");
    CHECK(validation_message(y).find("multi-agent mode needs explicit matrices") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config("/nonexistent.yaml"), ParseError);
}

TEST_CASE("runs are deterministic and metrics round-trip") {
  ScenarioConfig cfg = preset("example2", 2);
  cfg.horizon = 15;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const MetricsReport ra = run_scenario(cfg, a);
  run_scenario(cfg, b);
  for (const char* f : {"metrics.csv", "global.csv", "design.csv", "trace_agent_1.csv", "trace_agent_4.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const MetricsReport back = read_metrics(a);
  CHECK(back.horizon == 15);
  CHECK(back.seed == cfg.seed);
  CHECK(back.metrics == ra.metrics);  // %.17g is lossless

  cfg.seed = 2;
  const MetricsReport other = run_scenario(cfg);
  CHECK(other.at("mean_delta_bar") != ra.at("mean_delta_bar"));
}

TEST_CASE("compare runs") {
  MetricsReport r1{"a", 60, 1, 0, {{"m", 1.0}, {"n", 2.0}}};
  MetricsReport r2{"b", 60, 2, 0, {{"m", 1.5}}};
  const Comparison c = compare_runs({r1, r2});
  CHECK(c.runs == std::vector<std::string>{"a", "b"});
  CHECK(c.metrics == std::vector<std::string>{"violations", "m", "n"});
  CHECK(c.values[1][1] == 1.5);
  CHECK_FALSE(c.values[2][1].has_value());
  CHECK(format_comparison(c).find("violations") != std::string::npos);

  const Comparison same = compare_runs({r1, r1});
  for (const auto& row : same.values) CHECK(row[0] == row[1]);

  const fs::path dir = scratch("compare");
  fs::create_directories(dir);
  write_comparison_csv(c, dir / "cmp.csv");
  CHECK(slurp(dir / "cmp.csv") == "metric,a,b\nviolations,0,0\nm,1,1.5\nn,2,\n");

  r2.horizon = 200;
  CHECK_THROWS_AS(compare_runs({r1, r2}), HorizonMismatch);
  CHECK_THROWS_AS(compare_runs({r1}), ValidationError);
  CHECK_THROWS_AS(compare_runs({}), ValidationError);
}

TEST_CASE("single filter writes its trace") {
  const fs::path dir = scratch("single");
  const MetricsReport r = run_scenario(parse_config(kSingle), dir);
  CHECK(r.violations == 0);
  CHECK(r.at("initial_trace_pred") == doctest::Approx(2.0));
  const std::string trace = slurp(dir / "trace_agent_1.csv");
  CHECK(trace.rfind("k,t,x_1,x_2,x_pred_1,x_pred_2,x_hat_1,x_hat_2,bound_1,bound_2,e_1,e_2,trace_pred,", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 7);  // header + T_f + 1 rows
  CHECK_FALSE(fs::exists(dir / "global.csv"));
}

TEST_CASE("preset metrics match the golden files") {
  // Values are compared to 1e-9 relative rather than byte for byte, so that a
  // different compiler or libm does not break the regression.
  for (const char* name : {"example1", "example2"}) {
    CAPTURE(name);
    const fs::path dir = scratch(std::string("golden_") + name);
    fs::create_directories(dir);
    fs::copy_file(kSource / "tests/golden" / (std::string(name) + "_metrics.csv"), dir / "metrics.csv");
    const MetricsReport golden = read_metrics(dir);
    const MetricsReport now = run_scenario(preset(name));
    CHECK(now.violations == golden.violations);
    CHECK(now.horizon == golden.horizon);
    REQUIRE(now.metrics.size() == golden.metrics.size());
    for (std::size_t i = 0; i < now.metrics.size(); ++i) {
      CAPTURE(now.metrics[i].first);
      CHECK(now.metrics[i].first == golden.metrics[i].first);
      const double g = golden.metrics[i].second;
      // Iteration counts may shift by a step or two across platforms.
      const double tol = now.metrics[i].first == "sdp_iterations" ? 0.05 * g : 1e-9 * std::max(1.0, std::abs(g));
      CHECK(std::abs(now.metrics[i].second - g) <= tol);
    }
  }
  const std::string design = slurp(kSource / "tests/golden/example2_design.csv");
  CHECK(design.find("c,1.5\n") != std::string::npos);
  CHECK(design.find("r,1\n") != std::string::npos);
}
