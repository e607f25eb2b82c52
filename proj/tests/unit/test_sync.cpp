#include <cmath>
#include <random>

#include "doctest.h"
#include "smfsync/errors.hpp"
#include "smfsync/sync.hpp"
#include "test_helpers.hpp"

using namespace smfsync;
using namespace smfsync::sync;

namespace {

Mat rotation() {
  Mat a(2, 2);
  a << 0, -1, 1, 0;
  return a;
}

graph::InteractionGraph ring() {
  return graph::InteractionGraph::from_edges(4, {{3, 0}, {0, 1}, {1, 2}, {2, 3}}, Eigen::Vector4d(1, 0, 0, 0));
}

Dynamics example_dynamics() {
  Mat c(1, 2);
  c << 1, 0;
  return {rotation(), Mat::Identity(2, 2), c, Mat::Ones(1, 1), Mat::Identity(2, 2)};
}

riccati::Design example_design() {
  riccati::DesignOptions o;
  o.certificate = riccati::DecayCertificate{1.1, 0.9};
  return riccati::design(rotation(), Mat::Identity(2, 2), SpdMat::identity(2, 0.1), graph::gamma(ring()), 2.0 / 3,
                         0.6, o);
}

WorldSetup example_world(std::uint64_t seed, double aw = 0.05, double av = 0.05) {
  const riccati::Design d = example_design();
  WorldSetup s{example_dynamics(), Eigen::Vector2d(5, -5), ring(), d.riccati, {}, {}, seed, Execution::Serial};
  for (int i = 0; i < 4; ++i) {
    const Vec xhat = i < 2 ? Eigen::Vector2d(50, -50) : Eigen::Vector2d(-50, 50);
    s.agents.push_back({Ellipsoid(xhat, SpdMat::identity(2, 2.0)), xhat, xhat + Vec::Ones(2), SpdMat::identity(2, 0.1),
                        SpdMat::scalar(0.1), DisturbanceSpec{DisturbanceKind::UniformBox, 0, 0, 0, Vec::Constant(1, aw)},
                        DisturbanceSpec{DisturbanceKind::UniformBox, 0, 0, 0, Vec::Constant(1, av)}});
  }
  return s;
}

}  // namespace

TEST_CASE("tracking errors") {
  const Vec leader = Eigen::Vector2d(5, -5);
  SUBCASE("synchronized estimates give zero") {
    for (const Vec& e : tracking_errors(ring(), std::vector<Vec>(4, leader), leader)) CHECK(e.norm() == 0.0);
  }
  SUBCASE("two-agent chain") {
    graph::InteractionGraph chain = graph::InteractionGraph::from_edges(2, {{0, 1}}, Eigen::Vector2d(1, 0));
    const Vec d = Eigen::Vector2d(0.3, -0.7);
    auto eps = tracking_errors(chain, {leader + d, leader}, leader);
    CHECK((eps[0] + d).norm() < 1e-15);
    CHECK((eps[1] - d).norm() < 1e-15);
  }
  SUBCASE("initial estimates of the four-agent example") {
    const Vec a = Eigen::Vector2d(50, -50), b = Eigen::Vector2d(-50, 50);
    auto eps = tracking_errors(ring(), {a, a, b, b}, leader);
    // Hand arithmetic: eps1 = (b - a) + (leader - a), eps3 = a - b.
    CHECK(eps[0] == Eigen::Vector2d(-145, 145));
    CHECK(eps[1] == Eigen::Vector2d(0, 0));
    CHECK(eps[2] == Eigen::Vector2d(100, -100));
    CHECK(eps[3] == Eigen::Vector2d(0, 0));
  }
  CHECK_THROWS_AS(tracking_errors(ring(), std::vector<Vec>(3, leader), leader), DimensionMismatch);
}

TEST_CASE("control input") {
  const riccati::Design d = example_design();
  CHECK(control_input(d.riccati, ring(), Vec::Zero(2), 0).norm() == 0.0);
  const Vec u = control_input(d.riccati, ring(), Eigen::Vector2d(1, 0), 0);
  CHECK((u - 0.5 * rotation() * Eigen::Vector2d(1, 0)).norm() < 1e-15);

  SUBCASE("stacked local law equals the global closed form") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index agents = 2 + trial % 5, n = 2 + trial % 3, m = 1 + trial % n;
      Mat adj = Mat::Zero(agents, agents);
      for (Eigen::Index i = 0; i < agents; ++i)
        for (Eigen::Index j = 0; j < agents; ++j)
          if (i != j && unit_uniform(rng) < 0.5) adj(i, j) = 0.1 + 2 * unit_uniform(rng);
      Vec pin = Vec::Zero(agents);
      for (Eigen::Index i = 0; i < agents; ++i)
        if (unit_uniform(rng) < 0.4) pin(i) = 0.1 + unit_uniform(rng);
      graph::InteractionGraph g(adj, pin);
      riccati::RiccatiDesign rd{SpdMat::identity(n), SpdMat::identity(n), testing::random_matrix(rng, m, n),
                                1.0, 1.0, 0.5, 0.5 + 2 * unit_uniform(rng), 0.0};
      const Mat b = testing::random_matrix(rng, n, m);
      std::vector<Vec> xhat;
      for (Eigen::Index i = 0; i < agents; ++i) xhat.push_back(testing::random_matrix(rng, n, 1, 10.0));
      const Vec leader = testing::random_matrix(rng, n, 1, 10.0);
      auto eps = tracking_errors(g, xhat, leader);
      std::vector<Vec> bu;
      for (Eigen::Index i = 0; i < agents; ++i)
        bu.push_back(b * control_input(rd, g, eps[static_cast<std::size_t>(i)], i));
      const Vec global = global_control_term(rd, graph::gamma(g).gamma, b, stack(xhat), leader);
      CHECK((stack(bu) - global).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, global.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("disagreement bound constants") {
  const riccati::Design d = example_design();
  const GlobalErrorModel m = make_error_model(d.loop, {1.1, 0.9}, Mat::Identity(2, 2), 4, 2.0, 0.1, 0.1);
  CHECK(m.mubar == doctest::Approx(22.0));
  CHECK(asymptotic_normalized_bound(m) == doctest::Approx(2.462).epsilon(0.001 / 2.462));
  CHECK(normalized_bound(m, 0.0, 0) == doctest::Approx(asymptotic_normalized_bound(m)));
  CHECK(normalized_bound(m, 0.0, 50) == normalized_bound(m, 0.0, 0));
  for (Eigen::Index k = 0; k < 200; ++k) CHECK(disagreement_bound(m, 140.0, k + 1) <= disagreement_bound(m, 140.0, k));
  CHECK(disagreement_bound(m, 140.0, 5000) == doctest::Approx(m.mubar * asymptotic_normalized_bound(m)));

  const IssBound iss = iss_bound(m);
  CHECK(iss_envelope(m, 0, 0, 0, 7) == 0.0);
  CHECK(iss.gamma1(std::sqrt(2.0 * 4)) == doctest::Approx(m.mubar * linalg::sigma_max(m.bc) * std::sqrt(2.0)));
  CHECK(iss.gamma2(std::sqrt(0.1 * 4)) == doctest::Approx(m.mubar * std::sqrt(0.1)));
  CHECK(iss.beta(3.0, 4) < iss.beta(3.0, 3));
  CHECK(iss.gamma1(2.0) > iss.gamma1(1.0));
  CHECK_THROWS_AS(make_error_model(d.loop, {1.1, 1.0}, Mat::Identity(2, 2), 4, 2.0, 0.1, 0.1), ValidationError);
}

TEST_CASE("zero disturbances and exact estimates keep agents on the leader") {
  WorldSetup s = example_world(1);
  for (AgentSetup& a : s.agents) {
    a.init = Ellipsoid(s.leader, SpdMat::identity(2, 0.5));
    a.x0_low = a.x0_high = s.leader;
    a.w.kind = a.v.kind = DisturbanceKind::Zero;
  }
  World world(s);
  for (int k = 0; k < 8; ++k) {
    WorldRecord r = world.step();
    CHECK(r.delta.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r.error.cwiseAbs().maxCoeff() <= 1e-12);
    for (const AgentRecord& a : r.agents) CHECK(a.u.norm() <= 1e-12);
  }
}

TEST_CASE("four-agent run") {
  const riccati::Design d = example_design();
  WorldSetup s = example_world(7);
  World world(s);
  const GlobalErrorModel m = make_error_model(d.loop, {1.1, 0.9}, s);
  CHECK(m.p0 == doctest::Approx(2.0));
  CHECK(m.qbar == doctest::Approx(0.1));
  const Eigen::Index horizon = 30;
  std::vector<SyncStep> steps = simulate(world, m, horizon);
  REQUIRE(steps.size() == horizon + 1);

  // True initial states are inside the initial ellipsoids.
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.agents[i].init.contains(steps[0].world.agents[i].x));

  std::vector<Vec> es, ws;
  for (const SyncStep& st : steps) {
    CHECK(st.delta_bar <= st.bound);
    CHECK(st.delta_norm <= st.envelope * (1 + 1e-12));
    CHECK(st.delta_norm <= st.envelope_conservative * (1 + 1e-12));
    es.push_back(st.world.error);
    if (st.world.k < horizon) {
      Vec w(8);
      for (std::size_t i = 0; i < 4; ++i) w.segment(2 * static_cast<Eigen::Index>(i), 2) = st.world.agents[i].w;
      ws.push_back(w);
    }
    for (const AgentRecord& a : st.world.agents) {
      CHECK(a.trace_corr <= a.trace_pred * (1 + 1e-6));
      CHECK((a.x - a.x_hat).cwiseAbs().maxCoeff() <= a.bounds.maxCoeff() * (1 + 1e-6));
    }
  }
  // Agents synchronize with the leader.
  CHECK(steps.back().delta_bar < 0.2 * steps.front().delta_bar);

  SUBCASE("error system reproduces the disagreement sequence") {
    es.pop_back();
    const std::vector<Vec> direct = simulate_error_system(m, steps[0].world.delta, es, ws);
    for (std::size_t k = 0; k < direct.size(); ++k)
      CHECK((direct[k] - steps[k].world.delta).cwiseAbs().maxCoeff() <=
            1e-10 * std::max(1.0, steps[k].world.delta.cwiseAbs().maxCoeff()));
  }
  SUBCASE("seeded runs repeat exactly") {
    World again(s);
    std::vector<SyncStep> other = simulate(again, m, 5);
    for (std::size_t k = 0; k < other.size(); ++k) CHECK(other[k].world.delta == steps[k].world.delta);
  }
}

TEST_CASE("world protocol errors") {
  WorldSetup s = example_world(1);
  World w(s);
  CHECK_THROWS_AS(w.advance(), std::logic_error);
  w.observe();
  CHECK_THROWS_AS(w.observe(), std::logic_error);
  s.agents.pop_back();
  CHECK_THROWS_AS(World{s}, DimensionMismatch);
  CHECK(stream_seed(1, 0, 1) != stream_seed(1, 0, 2));
  CHECK(stream_seed(1, 0, 1) != stream_seed(1, 1, 1));
}
