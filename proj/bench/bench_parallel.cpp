// Serial reference kernels vs their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include "smfsync/filter.hpp"
#include "smfsync/scenario.hpp"
#include "smfsync/sdp.hpp"
#include "smfsync/sync.hpp"

using namespace smfsync;

namespace {

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::Parallel : Execution::Serial; }

// A directed ring of N agents pinned at agent 1, with the rotating dynamics of example 2.
sync::WorldSetup ring_world(Eigen::Index agents, Execution exec) {
  const scenario::ScenarioConfig base = scenario::preset("example2");
  std::vector<graph::Edge> edges;
  for (Eigen::Index i = 0; i < agents; ++i) edges.push_back({i, (i + 1) % agents, 1.0});
  Vec pin = Vec::Zero(agents);
  pin(0) = 1.0;
  const graph::InteractionGraph g = graph::InteractionGraph::from_edges(agents, edges, pin);
  const graph::Circle circle = graph::smallest_ratio_circle(graph::gamma(g).eigenvalues);
  const riccati::Design d = riccati::design(base.system.a, base.system.b, base.design->q, graph::gamma(g), circle.c0,
                                            circle.r0);
  sync::WorldSetup s{{base.system.a, base.system.b, base.system.c, base.system.d, base.system.g},
                     base.leader,
                     g,
                     d.riccati,
                     {},
                     {},
                     1,
                     exec};
  for (Eigen::Index i = 0; i < agents; ++i) s.agents.push_back(base.agents[static_cast<std::size_t>(i % 4)]);
  return s;
}

void BM_WorldStep(benchmark::State& st) {
  sync::World world(ring_world(st.range(1), mode(st)));
  for (auto _ : st) benchmark::DoNotOptimize(world.step());
  st.SetItemsProcessed(st.iterations() * st.range(1));
}

void BM_SchurAssembly(benchmark::State& st) {
  const Eigen::Index n = st.range(1);
  Mat e = Mat::Random(n, n), c = Mat::Random(2, n);
  smf::CorrectionVars vars;
  const sdp::ConicProgram prog =
      sdp::scalarize(smf::correction_problem(e, c, Mat::Identity(2, 2), SpdMat::identity(2, 0.1), vars));
  std::vector<Mat> g;
  for (const auto& b : prog.blocks) g.push_back(Mat::Identity(b.dim, b.dim) + 0.1 * Mat::Random(b.dim, b.dim));
  const auto scaled = sdp::detail::scale_constraints(prog, g, Execution::Serial);
  for (auto _ : st) benchmark::DoNotOptimize(sdp::detail::assemble_schur(scaled, prog.num_free(), mode(st)));
}

void BM_ScaleConstraints(benchmark::State& st) {
  const Eigen::Index n = st.range(1);
  Mat e = Mat::Random(n, n), c = Mat::Random(2, n);
  smf::CorrectionVars vars;
  const sdp::ConicProgram prog =
      sdp::scalarize(smf::correction_problem(e, c, Mat::Identity(2, 2), SpdMat::identity(2, 0.1), vars));
  std::vector<Mat> g;
  for (const auto& b : prog.blocks) g.push_back(Mat::Identity(b.dim, b.dim) + 0.1 * Mat::Random(b.dim, b.dim));
  for (auto _ : st) benchmark::DoNotOptimize(sdp::detail::scale_constraints(prog, g, mode(st)));
}

}  // namespace

// range(0): 0 serial, 1 OpenMP.
BENCHMARK(BM_WorldStep)->ArgsProduct({{0, 1}, {4, 16, 64}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SchurAssembly)->ArgsProduct({{0, 1}, {4, 8, 12}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScaleConstraints)->ArgsProduct({{0, 1}, {4, 8, 12}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
